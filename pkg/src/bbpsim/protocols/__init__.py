"""Block-propagation protocols as event-driven node state machines."""

from .bbp import BbpNode
from .bhp import BhpNode
from .cbp import CbpNode
from .lbp import LbpNode

NODE_CLASSES = {"bbp": BbpNode, "lbp": LbpNode, "bhp": BhpNode, "cbp": CbpNode}

__all__ = ["BbpNode", "BhpNode", "CbpNode", "LbpNode", "NODE_CLASSES"]
