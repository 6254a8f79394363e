"""Email social network reconstruction and structural analysis."""

from emailnet.errors import (
    ConfigurationError,
    EmailNetError,
    FitImpossibleError,
    UndefinedValueError,
    UsageError,
)
from emailnet.ingest import (
    EmailEvent,
    IngestStats,
    Label,
    SmtpSession,
    Status,
    Transmission,
    anonymize,
    classify_session,
    expand_recipients,
    parse_session_log,
    read_events,
)
from emailnet.network import (
    EmailNetwork,
    Selector,
    TimeWindow,
    build_network,
    mean_degree,
    merge,
    subnetwork,
)

__version__ = "0.1.0"
