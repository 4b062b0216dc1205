"""Results package initialization."""
from .schema import TABLES, TableSchema, VERSION
from .store import ResultStore, FORMATS

__all__ = ['TABLES', 'TableSchema', 'VERSION', 'ResultStore', 'FORMATS']
