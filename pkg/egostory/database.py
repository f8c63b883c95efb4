from typing import Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import declarative_base, sessionmaker

from egostory.config import get_settings

SessionLocal = sessionmaker(autocommit=False, autoflush=False)

Base = declarative_base()

engine: Optional[Engine] = None


def init_db(url: Optional[str] = None) -> Engine:
    """Bind the session factory to ``url`` (default: EGOSTORY_DATABASE_URL) and create the tables."""
    global engine
    url = url or get_settings().database_url
    connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {}
    engine = create_engine(url, connect_args=connect_args)
    SessionLocal.configure(bind=engine)

    # 🗂️ Models must be imported before create_all sees them
    import egostory.models  # noqa: F401

    Base.metadata.create_all(bind=engine)
    return engine


def get_db():
    if engine is None:
        init_db()
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()
