"""inboxaudit: batch privacy auditing for alias-partitioned email corpora."""

__version__ = "0.1.0"
