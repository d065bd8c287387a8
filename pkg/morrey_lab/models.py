"""SQLAlchemy models for the experiment run ledger."""
from datetime import datetime
from sqlalchemy import Column, Integer, String, Float, Text, DateTime, Index
from sqlalchemy.orm import declarative_base

Base = declarative_base()


class ExperimentRun(Base):
    """One CLI run: task, seed, parameters and the JSON summary it produced."""
    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(String(50), unique=True, nullable=False, index=True)
    task = Column(String(20), nullable=False)
    seed = Column(String(20), nullable=False)  # unsigned 64-bit, beyond SQLite INTEGER
    parameters = Column(Text, nullable=True)  # JSON object stored as text
    status = Column(String(20), nullable=False)
    exit_code = Column(Integer, nullable=False, default=0)
    headline = Column(Float, nullable=True)  # main value of the run, if any
    summary = Column(Text, nullable=True)  # Complete JSON summary
    created_at = Column(DateTime, default=datetime.utcnow, index=True)

    __table_args__ = (
        Index("idx_task_status", "task", "status"),
    )

    def __repr__(self):
        return f"<ExperimentRun(id={self.id}, run_id={self.run_id}, task={self.task}, status={self.status})>"
