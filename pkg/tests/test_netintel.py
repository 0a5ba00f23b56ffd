"""Offline IP-to-ASN mapping, abuse enrichment, and flow aggregation."""

import ipaddress

import numpy as np
import pytest

from inboxaudit.corpus.aliases import load_alias_registry
from inboxaudit.corpus.store import ingest_corpus
from inboxaudit.netintel import (AsnRecord, AsnTable, SnapshotParseError,
                                 asn_volume_concentration,
                                 build_sender_profiles, flag_marketing_asn,
                                 ip_hopping_correlation, is_internal_hop,
                                 load_abuse_reports, load_ip2asn,
                                 load_provider_list, lookup_asn)
from inboxaudit.netintel import SenderProfile, UNROUTED
from inboxaudit.pipeline import _bundled


def write_snapshot(tmp_path, text, name="ip2asn.tsv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_cidr_rows_tab_and_comma(tmp_path):
    path = write_snapshot(tmp_path, (
        "# comment\n"
        "\n"
        "167.89.0.0/17\tAS11377\tSENDGRID\n"
        "13.110.208.0/21,14340,SALESFORCE\n"))
    table = load_ip2asn(path)
    rec = table.lookup("167.89.1.1")
    assert rec is not None and rec.asn == 11377
    assert rec.organization == "SENDGRID"
    assert table.lookup("13.110.210.9").asn == 14340
    assert table.lookup("9.9.9.9") is None


def test_load_range_rows(tmp_path):
    path = write_snapshot(tmp_path,
                          "104.30.0.0\t104.30.3.255\t13335\tCLOUDFLARENET\n")
    table = load_ip2asn(path)
    assert table.lookup("104.30.0.1").organization == "CLOUDFLARENET"
    assert table.lookup("104.30.3.254").asn == 13335
    assert table.lookup("104.30.4.1") is None


def test_load_ipv6_rows(tmp_path):
    path = write_snapshot(tmp_path, "2a06:98c0::/29\tAS202623\tCLOUDY V6\n")
    table = load_ip2asn(path)
    assert table.lookup("2a06:98c0::1").asn == 202623
    assert table.lookup("2a07::1") is None


def test_org_names_keep_embedded_commas(tmp_path):
    path = write_snapshot(tmp_path, "5.6.0.0/16,99,ACME, INC.\n")
    table = load_ip2asn(path)
    assert table.lookup("5.6.7.8").organization == "ACME,INC."


@pytest.mark.parametrize("bad", [
    "167.89.0.0/17\tAS11377\n",            # missing org
    "not-an-ip\t1.2.3.4\t1\torg\n",        # bad range start
    "1.2.3.0/24\tASX\torg\n",              # unparseable asn
])
def test_load_rejects_bad_rows_with_lineno(tmp_path, bad):
    path = write_snapshot(tmp_path, "# header\n" + bad)
    with pytest.raises(SnapshotParseError, match="row 2"):
        load_ip2asn(path)


def test_longest_prefix_wins(tmp_path):
    path = write_snapshot(tmp_path, (
        "10.0.0.0/8\t100\tCOARSE\n"
        "10.20.0.0/16\t200\tMEDIUM\n"
        "10.20.30.0/24\t300\tFINE\n"))
    table = load_ip2asn(path)
    assert table.lookup("10.20.30.40").organization == "FINE"
    assert table.lookup("10.20.99.1").organization == "MEDIUM"
    assert table.lookup("10.99.1.1").organization == "COARSE"
    assert len(table) == 3


@pytest.mark.parametrize("ip,expected", [
    ("10.1.2.3", True), ("192.168.0.1", True), ("127.0.0.1", True),
    ("169.254.1.1", True), ("fe80::1", True), ("::1", True),
    ("192.0.2.7", True), ("198.51.100.9", True), ("203.0.113.1", True),
    ("8.8.8.8", False), ("167.89.1.2", False), ("2a06:98c0::1", False),
    ("garbage", True),
])
def test_is_internal_hop(ip, expected):
    assert is_internal_hop(ip) is expected


def test_lookup_asn_skips_internal_even_if_covered(tmp_path):
    path = write_snapshot(tmp_path, "0.0.0.0/0\t1\tEVERYTHING\n")
    table = load_ip2asn(path)
    assert table.lookup("10.0.0.1") is not None
    assert lookup_asn("10.0.0.1", table) is None
    assert lookup_asn("8.8.8.8", table).organization == "EVERYTHING"


def test_flag_marketing_asn():
    rec = AsnRecord(asn=11377, organization="SENDGRID", prefix="167.89.0.0/17")
    assert flag_marketing_asn(rec, ["sendgrid", "mailchimp"])
    assert flag_marketing_asn(rec, ["SendGrid"])
    assert not flag_marketing_asn(rec, ["mailchimp"])
    assert not flag_marketing_asn(None, ["sendgrid"])
    assert not flag_marketing_asn(rec, [])


def test_load_provider_list(tmp_path):
    path = tmp_path / "providers.txt"
    path.write_text("sendgrid  # the big one\n\n# all of it\nmailgun\n")
    assert load_provider_list(path) == ["sendgrid", "mailgun"]


def test_abuse_reports_sum_duplicates(tmp_path):
    path = tmp_path / "abuse.csv"
    path.write_text("167.89.1.1,5\n167.89.1.1\t7\n198.51.100.9,0\n")
    reports = load_abuse_reports(path)
    assert reports == {"167.89.1.1": 12, "198.51.100.9": 0}


@pytest.mark.parametrize("bad", ["167.89.1.1,-3\n", "nope,5\n", "167.89.1.1\n"])
def test_abuse_reports_reject_bad_rows(tmp_path, bad):
    path = tmp_path / "abuse.csv"
    path.write_text(bad)
    with pytest.raises(SnapshotParseError, match="row 1"):
        load_abuse_reports(path)


@pytest.fixture(scope="module")
def synth_profiles(synth_corpus):
    registry = load_alias_registry(synth_corpus.registry_path)
    store, report = ingest_corpus(synth_corpus.eml_dir, registry,
                                  trusted_mx=synth_corpus.expected["trusted_mx"])
    table = load_ip2asn(synth_corpus.ip2asn_path)
    abuse = load_abuse_reports(synth_corpus.abuse_path)
    providers = load_provider_list(_bundled("marketing_providers.txt"))
    profiles, flows = build_sender_profiles(store, table, abuse, providers)
    return store, report, profiles, flows, abuse


def test_profiles_partition_matched_corpus(synth_corpus, synth_profiles):
    store, report, profiles, _, _ = synth_profiles
    matched = sum(p.emails_total for p in profiles)
    unmatched_records = len(store.service_records("UNMATCHED"))
    assert matched + unmatched_records == len(store)
    names = {p.service_name for p in profiles}
    assert "UNMATCHED" not in names
    assert names == set(store.services())


def test_profile_network_facts(synth_corpus, synth_profiles):
    _, _, profiles, _, abuse = synth_profiles
    by_name = {p.service_name: p for p in profiles}
    shop = by_name["shopzilla"]
    assert len(shop.ips) == 8
    assert shop.uses_marketing_provider
    assert shop.spam_reports_total == sum(abuse.get(ip, 0) for ip in shop.ips)
    assert shop.root_domain == "shopzilla.com"
    # craftyard's block is absent from the snapshot: IPs but no ASNs
    craft = by_name["craftyard"]
    assert craft.ips and not craft.asns
    assert not craft.uses_marketing_provider
    # every profile IP is globally routable
    for profile in profiles:
        for ip in profile.ips:
            assert ipaddress.ip_address(ip).is_global


def test_treemap_totals_match_profiles(synth_profiles):
    _, _, profiles, flows, _ = synth_profiles
    treemap_total = sum(v for domains in flows.treemap.values()
                        for v in domains.values())
    assert treemap_total == sum(p.spam_reports_total for p in profiles)
    assert UNROUTED in flows.treemap  # craftyard block has abuse but no route


def test_sankey_edges_exclude_unrouted(synth_profiles):
    _, _, profiles, flows, _ = synth_profiles
    sources = {e["source"] for e in flows.sankey}
    assert "craftyard" not in sources
    assert all(e["weight"] >= 1 for e in flows.sankey)
    assert all(e["target"].startswith("AS") for e in flows.sankey)


def test_concentration_shape(synth_profiles):
    _, _, _, flows, _ = synth_profiles
    rows = asn_volume_concentration(flows)
    volumes = [v for _, v, _ in rows]
    shares = [s for _, _, s in rows]
    assert volumes == sorted(volumes, reverse=True)
    assert all(b >= a for a, b in zip(shares, shares[1:]))
    assert shares[-1] == pytest.approx(1.0)
    assert sum(volumes) == sum(e["weight"] for e in flows.sankey)


def test_concentration_empty():
    from inboxaudit.netintel import FlowEdges
    assert asn_volume_concentration(FlowEdges(sankey=[], treemap={})) == []


def _profile(name, n_ips, reports):
    p = SenderProfile(service_name=name)
    p.ips = {f"203.0.113.{i}" for i in range(1, n_ips + 1)}
    p.spam_reports_total = reports
    return p


def test_ip_hopping_perfect_linear():
    profiles = [_profile(f"s{i}", i, 10 * i) for i in range(1, 6)]
    stats = ip_hopping_correlation(profiles)
    assert stats["pearson"][0] == pytest.approx(1.0)
    assert stats["spearman"][0] == pytest.approx(1.0)
    assert stats["n"] == 5


def test_ip_hopping_monotone_nonlinear():
    # cubic growth: rank correlation saturates, linear does not
    profiles = [_profile(f"s{i}", i, i ** 3) for i in range(1, 9)]
    stats = ip_hopping_correlation(profiles)
    assert stats["spearman"][0] == pytest.approx(1.0)
    assert stats["pearson"][0] < 0.999


def test_ip_hopping_needs_three_points():
    profiles = [_profile("a", 1, 5), _profile("b", 2, 9),
                SenderProfile(service_name="no-ips")]
    with pytest.raises(ValueError):
        ip_hopping_correlation(profiles)


def test_ip_hopping_on_synth(synth_profiles):
    _, _, profiles, _, _ = synth_profiles
    stats = ip_hopping_correlation(profiles)
    assert stats["n"] >= 10
    assert stats["pearson"][0] > 0.5  # more IPs, more abuse, by construction
