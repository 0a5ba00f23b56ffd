"""Authentication lineage: SPF/DKIM verdicts, sender IPs, provenance labels.

Verdicts are read from stored Authentication-Results headers written by
the trusted receiving host; no live DNS. Provenance ties each message to
its alias's service: internal (service's own network), atp (authorized
third party sending on its behalf), or utp (sender the auth context
cannot tie to the service). The spam layer marks authenticated-but-
unsolicited mail (sos) apart from unauthenticated senders (uuss).
"""

from __future__ import annotations

import csv
import ipaddress
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

log = logging.getLogger(__name__)

# verdict enums
PASS, FAIL, NONE, ABSENT = "pass", "fail", "none", "absent"
# provenance enums
INTERNAL, ATP, UTP = "internal", "atp", "utp"
# spam enums
SOS, UUSS, NOT_SPAM = "sos", "uuss", "not_spam"

UNKNOWN_IP = "UNKNOWN"

HeaderMap = Sequence[tuple[str, str]]

_MECH_RE = re.compile(r"\b(spf|dkim)\s*=\s*([a-z0-9]+)", re.IGNORECASE)
_DKIM_DOMAIN_RE = re.compile(r"\bheader\.d\s*=\s*([^\s;]+)", re.IGNORECASE)
_SPF_FROM_RE = re.compile(r"\bsmtp\.mailfrom\s*=\s*([^\s;]+)", re.IGNORECASE)
_BRACKET_IP_RE = re.compile(r"\[(?:ipv6:)?([0-9A-Fa-f:.]+)\]", re.IGNORECASE)

# spf/dkim result token → verdict enum; unknown tokens mean "no usable verdict"
_RESULT_MAP = {
    "pass": PASS,
    "fail": FAIL,
    "softfail": FAIL,
    "hardfail": FAIL,
    "permerror": FAIL,
    "none": NONE,
    "neutral": NONE,
    "policy": NONE,
    "temperror": NONE,
}


@dataclass(frozen=True)
class AuthVerdict:
    spf: str = ABSENT
    dkim: str = ABSENT
    authenticated_domain: str | None = None

    @property
    def passes(self) -> bool:
        return self.spf == PASS or self.dkim == PASS

    @property
    def double_fail(self) -> bool:
        return self.spf == FAIL and self.dkim == FAIL


@dataclass(frozen=True)
class ProvenanceLabel:
    provenance: str
    spam: str
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.provenance not in (INTERNAL, ATP, UTP):
            raise ValueError(f"bad provenance: {self.provenance!r}")
        if self.spam not in (SOS, UUSS, NOT_SPAM):
            raise ValueError(f"bad spam label: {self.spam!r}")


def _headers_named(headers: HeaderMap, name: str) -> list[str]:
    name = name.lower()
    return [v for n, v in headers if n.lower() == name]


def _authserv_id(value: str) -> str:
    head = value.split(";", 1)[0].strip()
    # the authserv-id may carry a version suffix ("mx.audit 1")
    return head.split()[0].lower() if head else ""


def parse_auth_results(headers: HeaderMap, trusted_mx: str = "") -> AuthVerdict:
    """Verdicts from the first Authentication-Results header of the trusted host.

    Mechanism tokens are matched case-insensitively; a mechanism that
    never appears is `absent`. Soft and permanent failures collapse to
    `fail`; neutral-ish results collapse to `none`.
    """
    candidates = _headers_named(headers, "Authentication-Results")
    if not candidates:
        return AuthVerdict()
    chosen: str | None = None
    if trusted_mx:
        for value in candidates:
            if _authserv_id(value) == trusted_mx.lower():
                chosen = value
                break
    if chosen is None:
        if trusted_mx:
            log.debug("no Authentication-Results from %s; using topmost", trusted_mx)
        chosen = candidates[0]

    spf = dkim = ABSENT
    for mech, token in _MECH_RE.findall(chosen):
        verdict = _RESULT_MAP.get(token.lower())
        if verdict is None:
            continue
        if mech.lower() == "spf" and spf == ABSENT:
            spf = verdict
        elif mech.lower() == "dkim" and dkim == ABSENT:
            dkim = verdict

    auth_domain: str | None = None
    m = _DKIM_DOMAIN_RE.search(chosen)
    if m:
        auth_domain = m.group(1).strip().strip('"').lower()
    else:
        m = _SPF_FROM_RE.search(chosen)
        if m:
            raw = m.group(1).strip().strip('"').lower()
            auth_domain = raw.rsplit("@", 1)[-1] if raw else None
    return AuthVerdict(spf=spf, dkim=dkim, authenticated_domain=auth_domain)


def _first_ip_in(text: str) -> str | None:
    for m in _BRACKET_IP_RE.finditer(text):
        try:
            return str(ipaddress.ip_address(m.group(1)))
        except ValueError:
            continue
    return None


def extract_sender_ip(headers: HeaderMap, trusted_mx: str = "") -> str:
    """Connecting IP from the topmost Received header written by the trusted host.

    Only the from-clause (text before ` by `) is searched so the
    receiver's own address is never mistaken for the sender. Returns
    UNKNOWN when no trusted hop carries a parsable bracketed literal.
    """
    received = _headers_named(headers, "Received")
    by_token = re.compile(
        r"\bby\s+" + re.escape(trusted_mx), re.IGNORECASE) if trusted_mx else None
    for value in received:
        flat = " ".join(value.split())
        if by_token is not None and not by_token.search(flat):
            continue
        split = re.split(r"\bby\b", flat, maxsplit=1, flags=re.IGNORECASE)
        from_clause = split[0] if len(split) > 1 else flat
        ip = _first_ip_in(from_clause)
        if ip is not None:
            return ip
    return UNKNOWN_IP


def normalize_service_token(service_name: str) -> str:
    return "".join(ch for ch in service_name.lower() if ch.isalnum())


class ServiceOrgMap:
    """service → accepted from-domains and accepted ASN organization substrings.

    The corpus resolves "the service's own organization" through this
    editable mapping rather than by hand.
    """

    def __init__(self,
                 domains: dict[str, set[str]] | None = None,
                 org_substrings: dict[str, list[str]] | None = None):
        self._domains = {k.lower(): {d.lower() for d in v}
                         for k, v in (domains or {}).items()}
        self._orgs = {k.lower(): [s.lower() for s in v]
                      for k, v in (org_substrings or {}).items()}

    @classmethod
    def load(cls, path: str | Path) -> "ServiceOrgMap":
        domains: dict[str, set[str]] = {}
        orgs: dict[str, list[str]] = {}
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            required = {"service_name", "accepted_domains",
                        "accepted_asn_org_substrings"}
            if reader.fieldnames is None or not required <= set(reader.fieldnames):
                raise ValueError(f"{path}: need columns {sorted(required)}")
            for row in reader:
                name = row["service_name"].strip()
                domains[name] = {d.strip().lower()
                                 for d in row["accepted_domains"].split(";")
                                 if d.strip()}
                orgs[name] = [s.strip().lower()
                              for s in row["accepted_asn_org_substrings"].split(";")
                              if s.strip()]
        return cls(domains, orgs)

    def domains_for(self, service_name: str) -> set[str] | None:
        """Accepted domains for a service; None when the map has no entry."""
        return self._domains.get(service_name.lower())

    def org_substrings_for(self, service_name: str) -> list[str]:
        return self._orgs.get(service_name.lower(), [])


def domain_matches_service(from_root_domain: str, service_name: str,
                           org_map: ServiceOrgMap | None = None) -> bool:
    """Does the from-domain correspond to the alias's service?

    Prefers the explicit org map; otherwise the registrable domain's
    leftmost label must equal the normalized service name.
    """
    if not from_root_domain:
        return False
    domain = from_root_domain.lower()
    if org_map is not None:
        accepted = org_map.domains_for(service_name)
        if accepted is not None:
            return domain in accepted
    token = normalize_service_token(service_name)
    return bool(token) and domain.split(".")[0] == token


def asn_is_own_org(asn_organization: str | None, service_name: str,
                   org_map: ServiceOrgMap | None) -> bool:
    if not asn_organization or org_map is None:
        return False
    org = asn_organization.lower()
    return any(sub in org for sub in org_map.org_substrings_for(service_name))


def classify_provenance(record, registry=None, asn=None,
                        marketing_flag: bool = False,
                        org_map: ServiceOrgMap | None = None,
                        cloud_flag: bool = False,
                        content_label: str | None = None) -> ProvenanceLabel:
    """Provenance + spam label for one record.

    The registry binding already lives on the record (record.alias); the
    registry parameter is accepted for interface symmetry. Content class
    only influences the sos/not_spam split, never uuss.
    """
    verdict = AuthVerdict(spf=record.spf, dkim=record.dkim)
    alias = record.alias
    flags: list[str] = []

    unmatched = alias is None or isinstance(alias, str)
    if unmatched:
        provenance = UTP
    else:
        service = alias.service_name
        matched = domain_matches_service(record.from_root_domain, service, org_map)
        own_org = asn_is_own_org(
            getattr(asn, "organization", None), service, org_map)
        if not matched:
            provenance = UTP
        elif own_org:
            provenance = INTERNAL
        elif verdict.passes:
            provenance = ATP
            if cloud_flag and not marketing_flag:
                # application-layer operator behind a cloud ASN is opaque
                flags.append("operator_unknown")
        else:
            provenance = UTP

    if verdict.double_fail:
        flags.append("needs_review")

    if provenance == UTP or verdict.double_fail:
        spam = UUSS
    elif (provenance in (INTERNAL, ATP) and verdict.passes
          and content_label in ("promotional", "crm")):
        spam = SOS
    else:
        spam = NOT_SPAM

    return ProvenanceLabel(provenance=provenance, spam=spam, flags=tuple(flags))
