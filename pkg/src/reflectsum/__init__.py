"""reflectsum: phrase summaries of student reflections with supporter counts."""

from . import (clustering, corpus, evalmetrics, extractor, pipeline, porter,
               ranking, similarity)

__version__ = "0.1.0"
