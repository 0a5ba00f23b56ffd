from .adapter import (
    PROTOCOL_TEMPLATE,
    RESPONSE_SCHEMA,
    AdapterProtocolError,
    AdapterTransportError,
    build_prompt,
    classify_external,
    classify_records,
    classify_with_fallback,
    extract_json_objects,
    parse_adapter_response,
)
from .irr import InsufficientRatersError, RaterMatrix, cohens_kappa, pairwise_irr
from .rules import (
    ALERT,
    CRM,
    LABELS,
    PROMOTIONAL,
    SOURCE_EXTERNAL,
    SOURCE_RULES,
    Classification,
    RuleTable,
    classify_rule_based,
    classify_text,
    default_rule_table,
)

__all__ = [
    "PROTOCOL_TEMPLATE",
    "RESPONSE_SCHEMA",
    "AdapterProtocolError",
    "AdapterTransportError",
    "build_prompt",
    "classify_external",
    "classify_records",
    "classify_with_fallback",
    "extract_json_objects",
    "parse_adapter_response",
    "InsufficientRatersError",
    "RaterMatrix",
    "cohens_kappa",
    "pairwise_irr",
    "ALERT",
    "CRM",
    "LABELS",
    "PROMOTIONAL",
    "SOURCE_EXTERNAL",
    "SOURCE_RULES",
    "Classification",
    "RuleTable",
    "classify_rule_based",
    "classify_text",
    "default_rule_table",
]
