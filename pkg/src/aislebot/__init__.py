"""Multi-LLM supermarket assistant: classify turns, route them through
specialized chat roles with catalog-grounded retrieval, keep the cart
deterministic, and turn the approved list into a shelf-visit route."""

from .catalog import Catalog, CatalogSummary, Product, UserProfile, import_catalog
from .cart import Cart, CartLine, CartOp, apply_cart_ops, cart_total
from .classifier import QueryClass, QueryClassifier, evaluate, preprocess, split_corpus
from .gateway import Envelope, Gateway, parse_envelope, serialize_envelope
from .navigation import RoutePlan, exact_route, load_shelf_map, plan_route, shelves_for
from .orchestrator import Orchestrator, Phase, SessionState
from .retrieval import HashingTextEmbedder, ProductIndex, build_index, cosine, profile_filter, top_k

__version__ = "0.1.0"
