"""Run ledger: a small SQLite database recording every CLI run."""
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional

from sqlalchemy import create_engine, select
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, sessionmaker

from morrey_lab.config import DATABASE_DIR, DATABASE_URL
from morrey_lab.models import Base, ExperimentRun

_engine: Optional[Engine] = None
SessionLocal = sessionmaker(autocommit=False, autoflush=False)


def configure_ledger(url: str = DATABASE_URL) -> Engine:
    """Bind the session factory to `url`; the default ledger lives under database/."""
    global _engine
    connect_args = {}
    if url.startswith("sqlite"):
        if url == DATABASE_URL:
            Path(DATABASE_DIR).mkdir(parents=True, exist_ok=True)
        connect_args["check_same_thread"] = False
    _engine = create_engine(url, connect_args=connect_args)
    SessionLocal.configure(bind=_engine)
    return _engine


def get_engine() -> Engine:
    """Engine of the current ledger, created on first use."""
    if _engine is None:
        configure_ledger()
    return _engine


def init_db():
    """Create the ledger tables if they are missing."""
    Base.metadata.create_all(bind=get_engine())


@contextmanager
def get_db_context() -> Iterator[Session]:
    """Ledger session that commits on success and rolls back on error."""
    get_engine()
    db = SessionLocal()
    try:
        yield db
        db.commit()
    except Exception:
        db.rollback()
        raise
    finally:
        db.close()


def recent_runs(task: Optional[str] = None, limit: int = 20) -> List[ExperimentRun]:
    """Newest ledger entries first, optionally for one task."""
    query = select(ExperimentRun).order_by(ExperimentRun.id.desc()).limit(limit)
    if task is not None:
        query = query.where(ExperimentRun.task == task)
    with get_db_context() as db:
        runs = list(db.scalars(query))
        db.expunge_all()
    return runs
