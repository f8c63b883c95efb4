# egostory/models.py

from sqlalchemy import JSON, Column, Float, ForeignKey, Integer, String
from sqlalchemy.orm import relationship

from .database import Base


class EvaluationRun(Base):
    __tablename__ = "evaluation_runs"

    id = Column(Integer, primary_key=True, index=True)
    video_id = Column(String, nullable=False, index=True)
    model_hash = Column(String, nullable=False)
    config_hash = Column(String, nullable=False)
    package_version = Column(String, default="")

    # 📊 Headline numbers of the criterion-mode summary
    average_precision = Column(Float, nullable=False)
    objectness_ap = Column(Float, nullable=False)
    n_keyframes = Column(Integer, nullable=False)
    object_recall = Column(Float, nullable=False)
    mean_prominence = Column(Float, nullable=True)
    n_events = Column(Integer, default=0)

    report = Column(JSON, default={})

    metrics = relationship(
        "RunMetric",
        back_populates="run",
        cascade="all, delete",
        order_by="RunMetric.id",
    )


class RunMetric(Base):
    __tablename__ = "run_metrics"

    id = Column(Integer, primary_key=True, index=True)
    method = Column(String, nullable=False)
    name = Column(String, nullable=False)
    value = Column(Float, nullable=True)

    run_id = Column(Integer, ForeignKey("evaluation_runs.id", ondelete="CASCADE"))
    run = relationship("EvaluationRun", back_populates="metrics")
