"""collabboard: a relay-replicated shared 3D whiteboard session.

Layers, bottom to top:

* :mod:`collabboard.geometry` — poses, frames, reflections, sketch
  transforms (compiled kernels with a pure-Python twin).
* :mod:`collabboard.protocol` — canonical-JSON wire codec and schemas.
* :mod:`collabboard.model` — session state and the deterministic event
  reducer shared by relay and clients.
* :mod:`collabboard.compose` — per-viewer scene composition: spatial
  configurations (side-by-side, mirrored, eyes-free) and telepathy.
* :mod:`collabboard.relay` / :mod:`collabboard.server` — sequencing core
  and the TCP + WebSocket server (``relay`` console script).
* :mod:`collabboard.client` — native client with a local replica.
* :mod:`collabboard.sim` — deterministic headless simulator (``sim``
  console script).
"""

from .geometry import BACKEND as GEOMETRY_BACKEND
from .model import SessionState, apply_event, new_session
from .protocol import Message, decode, encode

__version__ = "0.1.0"

__all__ = [
    "GEOMETRY_BACKEND",
    "Message",
    "SessionState",
    "apply_event",
    "decode",
    "encode",
    "new_session",
    "__version__",
]
