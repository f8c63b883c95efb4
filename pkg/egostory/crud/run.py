import hashlib
from typing import List, Optional

from sqlalchemy.exc import IntegrityError
from sqlalchemy.orm import Session

from egostory import models
from egostory.schemas import ImportanceModel, MetricsReport


def model_hash(model: ImportanceModel) -> str:
    return hashlib.sha256(model.model_dump_json().encode("utf-8")).hexdigest()


def _metric_rows(report: MetricsReport) -> List[models.RunMetric]:
    rows = []
    for m in report.methods:
        rows.append(models.RunMetric(method=m.method, name="object_recall", value=m.object_recall))
        rows.append(models.RunMetric(method=m.method, name="mean_prominence", value=m.mean_prominence))
        rows.append(models.RunMetric(method=m.method, name="n_frames", value=float(len(m.frames))))
    for p in report.recall_curve:
        rows.append(models.RunMetric(method=p.method, name=f"recall@{p.n_frames}", value=p.object_recall))
    return rows


def create_run(db: Session, report: MetricsReport, model_digest: str):
    ours = next((m for m in report.methods if m.method == "criterion"), None)
    run = models.EvaluationRun(
        video_id=report.video_id,
        model_hash=model_digest,
        config_hash=report.header.config_hash,
        package_version=report.header.package_version,
        average_precision=report.ap_full,
        objectness_ap=report.ap_objectness,
        n_keyframes=len(ours.frames) if ours else 0,
        object_recall=ours.object_recall if ours else 0.0,
        mean_prominence=ours.mean_prominence if ours else None,
        n_events=report.n_events,
        report=report.model_dump(mode="json"),
        metrics=_metric_rows(report),
    )
    db.add(run)
    try:
        db.commit()
    except IntegrityError:
        db.rollback()
        raise
    db.refresh(run)
    return run


def get_run(db: Session, run_id: int):
    return db.query(models.EvaluationRun).filter(models.EvaluationRun.id == run_id).first()


def get_runs(db: Session, video_id: Optional[str] = None):
    query = db.query(models.EvaluationRun)
    if video_id is not None:
        query = query.filter(models.EvaluationRun.video_id == video_id)
    return query.order_by(models.EvaluationRun.id).all()


def delete_run(db: Session, run_id: int):
    run = get_run(db, run_id)
    if run:
        db.delete(run)
        db.commit()
        return run
    return None
