"""EML parsing: header precedence, dates, bodies, total-function behavior."""

from datetime import date, datetime, timezone

import pytest

from inboxaudit.corpus.aliases import AliasEntry, AliasRegistry
from inboxaudit.corpus.eml import (PARSE_OK, PARSE_UNPARSEABLE, UNMATCHED,
                                   EmailRecord, html_to_text, parse_eml)
from inboxaudit.synth import render_eml

TRUSTED = "mx.audit.example"


@pytest.fixture()
def registry():
    return AliasRegistry([
        AliasEntry(local_part="maple007", index=7, service_name="shopzilla",
                   service_kind="online_service",
                   registration_date=date(2024, 1, 1)),
    ])


def build(**kwargs):
    defaults = dict(
        to_addr="maple007@audit.example",
        from_addr="deals@mail.shopzilla.com",
        date=datetime(2024, 3, 4, 10, 30, tzinfo=timezone.utc),
        subject="Flash sale: 20% off",
        body="Save big today: https://shopzilla.com/deals",
        message_id="msg-1@shopzilla.com",
        sender_ip="167.89.1.1",
        trusted_mx=TRUSTED,
    )
    defaults.update(kwargs)
    return render_eml(**defaults)


def test_basic_parse(registry):
    rec = parse_eml(build(), registry, trusted_mx=TRUSTED)
    assert rec.parse_status == PARSE_OK
    assert rec.alias.service_name == "shopzilla"
    assert rec.from_address == "deals@mail.shopzilla.com"
    assert rec.from_root_domain == "shopzilla.com"
    assert rec.sender_ip == "167.89.1.1"
    assert rec.spf == "pass" and rec.dkim == "pass"
    assert rec.received_utc == datetime(2024, 3, 4, 10, 30,
                                        tzinfo=timezone.utc)
    assert rec.subject.startswith("Flash sale")
    assert "Save big" in rec.body_text


def test_unmatched_recipient(registry):
    rec = parse_eml(build(to_addr="stray999@audit.example"), registry,
                    trusted_mx=TRUSTED)
    assert rec.parse_status == PARSE_OK
    assert rec.alias == UNMATCHED
    assert rec.service_name == UNMATCHED


def test_recipient_priority_delivered_to_first(registry):
    raw = build().replace(b"Delivered-To: maple007@audit.example",
                          b"Delivered-To: maple007@audit.example\n"
                          b"X-Original-To: other000@audit.example")
    rec = parse_eml(raw, registry, trusted_mx=TRUSTED)
    assert rec.alias.local_part == "maple007"


def test_recipient_fallback_to_x_original_to(registry):
    raw = build(to_addr="list@elsewhere.example").replace(
        b"Delivered-To: list@elsewhere.example",
        b"X-Original-To: maple007@audit.example")
    rec = parse_eml(raw, registry, trusted_mx=TRUSTED)
    assert rec.alias.local_part == "maple007"


def test_recipient_fallback_to_to_header(registry):
    raw = build(to_addr="maple007@audit.example").replace(
        b"Delivered-To: maple007@audit.example\n", b"")
    rec = parse_eml(raw, registry, trusted_mx=TRUSTED)
    assert rec.alias.local_part == "maple007"


def test_verdict_token_collapse(registry):
    for token, expected in [("softfail", "fail"), ("permerror", "fail"),
                            ("neutral", "none"), ("temperror", "none"),
                            ("policy", "none"), ("pass", "pass"),
                            ("fail", "fail"), ("none", "none")]:
        rec = parse_eml(build(spf=token), registry, trusted_mx=TRUSTED)
        assert rec.spf == expected, token


def test_absent_mechanisms(registry):
    rec = parse_eml(build(spf=None, dkim=None), registry, trusted_mx=TRUSTED)
    assert rec.spf == "absent" and rec.dkim == "absent"
    rec = parse_eml(build(dkim=None), registry, trusted_mx=TRUSTED)
    assert rec.spf == "pass" and rec.dkim == "absent"


def test_untrusted_authserv_id_falls_back_to_first(registry):
    raw = build(spf="fail", dkim="fail")
    # prepend an AR header from a foreign host claiming a pass
    raw = raw.replace(
        b"Authentication-Results: mx.audit.example;",
        b"Authentication-Results: other.host; spf=pass smtp.mailfrom=x@y.com\n"
        b"Authentication-Results: mx.audit.example;")
    rec = parse_eml(raw, registry, trusted_mx=TRUSTED)
    assert rec.spf == "fail" and rec.dkim == "fail"
    # without a trusted hint, the topmost header wins
    rec = parse_eml(raw, registry, trusted_mx="")
    assert rec.spf == "pass"


def test_sender_ip_requires_trusted_hop(registry):
    rec = parse_eml(build(), registry, trusted_mx="mx.other.example")
    assert rec.sender_ip == "UNKNOWN"


def test_sender_ip_ignores_by_clause(registry):
    raw = build()
    raw = raw.replace(b"by mx.audit.example (Postfix)",
                      b"by mx.audit.example (Postfix) [198.51.100.9]")
    rec = parse_eml(raw, registry, trusted_mx=TRUSTED)
    assert rec.sender_ip == "167.89.1.1"


def test_sender_ip_ipv6(registry):
    rec = parse_eml(build(sender_ip="IPv6:2001:db8::25"), registry,
                    trusted_mx=TRUSTED)
    assert rec.sender_ip == "2001:db8::25"


def test_unparseable_noise(registry):
    rec = parse_eml(b"\x00\xff binary soup, no headers", registry,
                    trusted_mx=TRUSTED)
    assert rec.parse_status == PARSE_UNPARSEABLE
    assert rec.alias == UNMATCHED
    assert rec.message_id.startswith("sha256:")
    assert rec.received_utc is None


def test_missing_date_is_unparseable(registry):
    raw = build()
    raw = raw.replace(b"Date:", b"X-Was-Date:")
    # Received still carries a date, so this parses via the fallback
    rec = parse_eml(raw, registry, trusted_mx=TRUSTED)
    assert rec.parse_status == PARSE_OK
    assert rec.received_utc is not None


def test_message_id_fallback_is_stable(registry):
    raw = build().replace(b"Message-ID:", b"X-No-ID:")
    rec1 = parse_eml(raw, registry, trusted_mx=TRUSTED)
    rec2 = parse_eml(raw, registry, trusted_mx=TRUSTED)
    assert rec1.message_id == rec2.message_id
    assert rec1.message_id.startswith("sha256:")


def test_naive_date_becomes_utc(registry):
    raw = build()
    raw = raw.replace(b"Date: Mon, 04 Mar 2024 10:30:00 +0000",
                      b"Date: Mon, 04 Mar 2024 10:30:00 -0000")
    rec = parse_eml(raw, registry, trusted_mx=TRUSTED)
    assert rec.received_utc is not None
    assert rec.received_utc.tzinfo is not None


def test_timezone_conversion(registry):
    rec = parse_eml(build(), registry, audit_timezone="America/New_York",
                    trusted_mx=TRUSTED)
    assert rec.received_local.hour == 5  # 10:30 UTC is 05:30 in March EST
    assert rec.received_utc.hour == 10


def test_html_body_extraction(registry):
    raw = build(body="plain fallback",
                html_body="<html><head><style>x{}</style></head>"
                          "<body><p>Hello <b>world</b></p>"
                          "<script>alert(1)</script></body></html>")
    rec = parse_eml(raw, registry, trusted_mx=TRUSTED)
    # multipart/alternative: the text part is preferred
    assert "plain fallback" in rec.body_text


def test_html_to_text_strips_script_and_style():
    text = html_to_text("<head><title>t</title></head><body>keep "
                        "<script>drop()</script><style>drop{}</style>"
                        "<p>this</p></body>")
    assert "keep" in text and "this" in text
    assert "drop" not in text


def test_round_trip_record_dict(registry):
    rec = parse_eml(build(), registry, trusted_mx=TRUSTED)
    again = EmailRecord.from_dict(rec.to_dict())
    assert again == rec
