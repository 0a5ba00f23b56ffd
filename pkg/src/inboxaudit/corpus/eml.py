"""EML parsing: one raw byte stream in, one EmailRecord out, never an exception.

A record is `ok` when the bytes decode to a message with recognizable
headers and a parseable date; anything else becomes an `unparseable`
record that still counts toward volume totals. Header decoding handles
folding and encoded words via the stdlib parser.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from email import policy
from email.message import Message
from email.parser import BytesParser
from email.utils import getaddresses, parseaddr, parsedate_to_datetime
from html.parser import HTMLParser
from zoneinfo import ZoneInfo

from ..authlineage import ABSENT, UNKNOWN_IP, extract_sender_ip, parse_auth_results
from .aliases import AliasEntry, AliasRegistry
from .suffix import root_domain

log = logging.getLogger(__name__)

UNMATCHED = "UNMATCHED"

PARSE_OK = "ok"
PARSE_UNPARSEABLE = "unparseable"

# at least one of these must surface for the bytes to count as a message
_RECOGNIZED_HEADERS = frozenset({
    "from", "to", "date", "received", "subject", "message-id",
    "delivered-to", "x-original-to",
})

_RECIPIENT_PRIORITY = ("Delivered-To", "X-Original-To", "To")


@dataclass
class EmailRecord:
    message_id: str
    alias: AliasEntry | str  # AliasEntry or UNMATCHED
    from_address: str
    from_root_domain: str
    received_utc: datetime | None
    received_local: datetime | None
    sender_ip: str
    spf: str
    dkim: str
    subject: str
    body_text: str
    parse_status: str

    @property
    def service_name(self) -> str:
        if isinstance(self.alias, AliasEntry):
            return self.alias.service_name
        return UNMATCHED

    def to_dict(self) -> dict:
        return {
            "message_id": self.message_id,
            "alias": self.alias.to_dict() if isinstance(self.alias, AliasEntry)
                     else UNMATCHED,
            "from_address": self.from_address,
            "from_root_domain": self.from_root_domain,
            "received_utc": self.received_utc.isoformat()
                            if self.received_utc else None,
            "received_local": self.received_local.isoformat()
                              if self.received_local else None,
            "sender_ip": self.sender_ip,
            "spf": self.spf,
            "dkim": self.dkim,
            "subject": self.subject,
            "body_text": self.body_text,
            "parse_status": self.parse_status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmailRecord":
        alias = d["alias"]
        if isinstance(alias, dict):
            alias = AliasEntry.from_dict(alias)
        return cls(
            message_id=d["message_id"],
            alias=alias,
            from_address=d["from_address"],
            from_root_domain=d["from_root_domain"],
            received_utc=datetime.fromisoformat(d["received_utc"])
                         if d["received_utc"] else None,
            received_local=datetime.fromisoformat(d["received_local"])
                           if d["received_local"] else None,
            sender_ip=d["sender_ip"],
            spf=d["spf"],
            dkim=d["dkim"],
            subject=d["subject"],
            body_text=d["body_text"],
            parse_status=d["parse_status"],
        )


class _TextExtractor(HTMLParser):
    _SKIP = {"script", "style", "head"}

    def __init__(self):
        super().__init__()
        self.chunks: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth > 0:
            self._skip_depth -= 1

    def handle_data(self, data):
        if self._skip_depth == 0 and data.strip():
            self.chunks.append(data.strip())


def html_to_text(markup: str) -> str:
    extractor = _TextExtractor()
    try:
        extractor.feed(markup)
        extractor.close()
    except Exception:  # malformed markup: keep whatever was extracted
        pass
    return "\n".join(extractor.chunks)


def _header_items(msg: Message) -> list[tuple[str, str]]:
    items: list[tuple[str, str]] = []
    for name, value in msg.raw_items():
        try:
            items.append((name, str(msg.policy.header_fetch_parse(name, value))))
        except Exception:
            items.append((name, str(value)))
    return items


def _header(msg: Message, name: str) -> str:
    try:
        value = msg.get(name)
        return str(value) if value is not None else ""
    except Exception:
        return ""


def _parse_date_value(value: str) -> datetime | None:
    try:
        dt = parsedate_to_datetime(value)
    except (TypeError, ValueError):
        return None
    if dt is None:
        return None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt


def _message_datetime(msg: Message, headers: list[tuple[str, str]]) -> datetime | None:
    dt = _parse_date_value(_header(msg, "Date"))
    if dt is not None:
        return dt
    # fall back to the stamp the receiving host wrote into Received
    for name, value in headers:
        if name.lower() != "received" or ";" not in value:
            continue
        dt = _parse_date_value(value.rsplit(";", 1)[1].strip())
        if dt is not None:
            return dt
    return None


def recipient_local_part(msg: Message) -> str:
    for header_name in _RECIPIENT_PRIORITY:
        raw = _header(msg, header_name)
        if not raw:
            continue
        addresses = [addr for _, addr in getaddresses([raw]) if "@" in addr]
        if addresses:
            return addresses[0].rsplit("@", 1)[0].strip().lower()
    return ""


def _body_text(msg: Message) -> str:
    plain: list[str] = []
    html: list[str] = []
    try:
        parts = list(msg.walk())
    except Exception:
        return ""
    for part in parts:
        if part.is_multipart():
            continue
        try:
            ctype = part.get_content_type()
        except Exception:
            continue
        if ctype not in ("text/plain", "text/html"):
            continue
        try:
            content = part.get_content()
        except Exception:
            try:
                payload = part.get_payload(decode=True)
                content = payload.decode("utf-8", errors="replace") if payload else ""
            except Exception:
                continue
        if not isinstance(content, str):
            continue
        (plain if ctype == "text/plain" else html).append(content.strip())
    if plain:
        return "\n".join(plain)
    if html:
        return "\n".join(html_to_text(h) for h in html)
    return ""


def _content_hash_id(raw: bytes) -> str:
    return "sha256:" + hashlib.sha256(raw).hexdigest()


def _unparseable(raw: bytes, subject: str = "", from_address: str = "") -> EmailRecord:
    return EmailRecord(
        message_id=_content_hash_id(raw),
        alias=UNMATCHED,
        from_address=from_address,
        from_root_domain="",
        received_utc=None,
        received_local=None,
        sender_ip=UNKNOWN_IP,
        spf=ABSENT,
        dkim=ABSENT,
        subject=subject,
        body_text="",
        parse_status=PARSE_UNPARSEABLE,
    )


def parse_eml(raw: bytes,
              registry: AliasRegistry | None = None,
              audit_timezone: str = "UTC",
              trusted_mx: str = "") -> EmailRecord:
    """Parse one EML byte stream into an EmailRecord (total function)."""
    if not isinstance(raw, (bytes, bytearray)):
        raise TypeError("parse_eml expects bytes")
    raw = bytes(raw)
    try:
        msg = BytesParser(policy=policy.default).parsebytes(raw)
    except Exception:
        return _unparseable(raw)

    headers = _header_items(msg)
    names = {n.lower() for n, _ in headers}
    if not (names & _RECOGNIZED_HEADERS):
        return _unparseable(raw)

    subject = re.sub(r"\s+", " ", _header(msg, "Subject")).strip()
    from_address = parseaddr(_header(msg, "From"))[1].strip()

    received = _message_datetime(msg, headers)
    if received is None:
        return _unparseable(raw, subject=subject, from_address=from_address)

    message_id = _header(msg, "Message-ID").strip().strip("<>").strip()
    if not message_id:
        message_id = _content_hash_id(raw)

    from_root = ""
    if "@" in from_address:
        try:
            from_root = root_domain(from_address)
        except ValueError:
            from_root = ""

    alias: AliasEntry | str = UNMATCHED
    local = recipient_local_part(msg)
    if registry is not None and local:
        matched = registry.match(local)
        if matched is not None:
            alias = matched

    received_utc = received.astimezone(timezone.utc)
    received_local = received_utc.astimezone(ZoneInfo(audit_timezone))
    verdict = parse_auth_results(headers, trusted_mx)

    return EmailRecord(
        message_id=message_id,
        alias=alias,
        from_address=from_address,
        from_root_domain=from_root,
        received_utc=received_utc,
        received_local=received_local,
        sender_ip=extract_sender_ip(headers, trusted_mx),
        spf=verdict.spf,
        dkim=verdict.dkim,
        subject=subject,
        body_text=_body_text(msg),
        parse_status=PARSE_OK,
    )
