"""Reference model server for the /v1/query wire protocol.

Serves a small softmax classifier over categorical inputs behind three
endpoints: POST /v1/query, POST /v1/query_batch, and GET /v1/info. The
model format and trainer are deliberately independent of any client
library: only the wire protocol is shared.
"""

from .model import ServedModel, train_model
from .app import create_app

__all__ = ["ServedModel", "train_model", "create_app"]
__version__ = "0.1.0"
