"""Pipeline stages behind the CLI: ingest, classify, analyze, report.

Each stage reads its inputs from disk and leaves artifacts in the
configured output directory, so stages can run in separate processes.
All numeric output goes through repr() of Python floats, which keeps
reruns byte-identical for a fixed seed.
"""

from __future__ import annotations

import csv
import json
import logging
from importlib import resources
from pathlib import Path

import numpy as np

from .authlineage import ServiceOrgMap, classify_provenance
from .classify.adapter import classify_records
from .classify.rules import Classification, RuleTable, default_rule_table
from .cluster import (FEATURE_NAMES, FixedComponents, VarianceThreshold,
                      build_features, loadings_report, pca_fit, select_k,
                      standardize)
from .config import AuditConfig
from .corpus.aliases import AliasEntry, load_alias_registry
from .corpus.store import (CorpusStore, ingest_corpus, read_corpus_jsonl,
                           write_corpus_jsonl)
from .netintel import (AsnTable, asn_volume_concentration,
                       build_sender_profiles, flag_marketing_asn,
                       ip_hopping_correlation, load_abuse_reports,
                       load_ip2asn, load_provider_list, lookup_asn)
from .stats.core import (ContingencyTable, chi_squared_independence,
                         descriptive, kruskal_wallis, one_way_anova, pareto)
from .temporal import (build_daily_series, decompose_additive,
                       hour_day_matrix, spectrum_bins)

log = logging.getLogger(__name__)

CORPUS_FILE = "corpus.jsonl"
INGEST_REPORT_FILE = "ingest_report.json"
CLASSIFICATIONS_FILE = "classifications.jsonl"
CLASSIFY_SUMMARY_FILE = "classification_summary.json"
REPORT_FILE = "report.json"

ANALYZE_ARTIFACTS = [
    "pareto.csv", "spectrum.csv", "decomposition.csv", "heatmap.csv",
    "features.csv", "clusters.csv", "loadings.json", "sankey.json",
    "treemap.json", "sector_stats.json",
]


def _out_dir(cfg: AuditConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True,
                               ensure_ascii=False) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])


def _bundled(name: str) -> Path:
    return resources.files("inboxaudit").joinpath("data", name)


def load_schema(name: str) -> dict:
    """Published JSON schema (or the CSV header manifest) by file name."""
    ref = resources.files("inboxaudit").joinpath("schemas", name)
    return json.loads(ref.read_text(encoding="utf-8"))


def _load_providers(path: str | None, bundled_name: str) -> list[str]:
    if path:
        return load_provider_list(path)
    return load_provider_list(_bundled(bundled_name))


def _load_rule_table(cfg: AuditConfig) -> RuleTable:
    if cfg.rule_table_path:
        return RuleTable.load(cfg.rule_table_path)
    return default_rule_table()


def _load_sector_map(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    sectors: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"root_domain", "sector"} <= set(
                reader.fieldnames):
            raise ValueError(f"{path}: need root_domain and sector columns")
        for row in reader:
            sectors[row["root_domain"].strip().lower()] = row["sector"].strip()
    return sectors


def run_ingest(cfg: AuditConfig) -> dict:
    """Parse the EML directory into corpus.jsonl plus an ingest report."""
    out = _out_dir(cfg)
    registry = load_alias_registry(cfg.registry_path)
    store, report = ingest_corpus(cfg.corpus_dir, registry,
                                  audit_timezone=cfg.audit_timezone,
                                  trusted_mx=cfg.trusted_mx)
    write_corpus_jsonl(store, out / CORPUS_FILE)
    payload = report.to_dict()
    _write_json(out / INGEST_REPORT_FILE, payload)
    log.info("ingested %d files: %d ok, %d unparseable, %d unmatched",
             report.files, report.ok, report.unparseable, report.unmatched)
    return payload


def _require_corpus(cfg: AuditConfig) -> CorpusStore:
    path = _out_dir(cfg) / CORPUS_FILE
    if not path.is_file():
        raise OSError(f"corpus artifact missing: {path} (run ingest first)")
    return read_corpus_jsonl(path)


def run_classify(cfg: AuditConfig) -> dict:
    """Classify content of every parsed record; write JSONL + summary."""
    out = _out_dir(cfg)
    store = _require_corpus(cfg)
    table = _load_rule_table(cfg)
    results = classify_records(store.records, cfg.classifier,
                               cfg=cfg.adapter, table=table)

    with (out / CLASSIFICATIONS_FILE).open("w", encoding="utf-8") as fh:
        for message_id in sorted(results):
            entry = {"message_id": message_id, **results[message_id].to_dict()}
            fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")

    counts = {"promotional": 0, "crm": 0, "alert": 0}
    fallbacks = 0
    for cls in results.values():
        counts[cls.label] += 1
        if "adapter_fallback" in cls.flags:
            fallbacks += 1
    classified = sum(counts.values())
    summary = {
        "classifier": cfg.classifier,
        "classified": classified,
        "counts": counts,
        "percentages": {label: (100.0 * n / classified if classified else 0.0)
                        for label, n in counts.items()},
        "adapter_fallbacks": fallbacks,
        "unclassified": len(store.records) - classified,
    }
    _write_json(out / CLASSIFY_SUMMARY_FILE, summary)
    return summary


def _load_classifications(cfg: AuditConfig, store: CorpusStore
                          ) -> dict[str, Classification]:
    """Reuse the classify artifact when present, else classify in-memory."""
    path = _out_dir(cfg) / CLASSIFICATIONS_FILE
    if path.is_file():
        results: dict[str, Classification] = {}
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                    results[entry["message_id"]] = Classification(
                        label=entry["label"], confidence=entry["confidence"],
                        rationale=entry["rationale"], source=entry["source"],
                        retries=entry.get("retries", 0),
                        flags=tuple(entry.get("flags", ())))
                except (KeyError, ValueError) as exc:
                    raise ValueError(
                        f"{path}:{lineno}: bad classification line: {exc}"
                    ) from exc
        return results
    table = _load_rule_table(cfg)
    return classify_records(store.records, "rules", table=table)


def _resolve_sector(service: str, records, sector_map: dict[str, str]) -> str:
    """Sector by mapped root domain, else by alias kind, else Unknown."""
    for rec in records:
        if rec.from_root_domain and rec.from_root_domain in sector_map:
            return sector_map[rec.from_root_domain]
    for rec in records:
        if isinstance(rec.alias, AliasEntry):
            return rec.alias.service_kind
    return "Unknown"


def _provenance_summary(store: CorpusStore, asn_table: AsnTable,
                        providers: list[str], clouds: list[str],
                        org_map: ServiceOrgMap | None,
                        classifications: dict[str, Classification]) -> dict:
    provenance_counts: dict[str, int] = {}
    spam_counts: dict[str, int] = {}
    flag_counts: dict[str, int] = {}
    for rec in store.ok_records():
        asn = lookup_asn(rec.sender_ip, asn_table) if rec.sender_ip else None
        cls = classifications.get(rec.message_id)
        label = classify_provenance(
            rec, asn=asn,
            marketing_flag=flag_marketing_asn(asn, providers),
            org_map=org_map,
            cloud_flag=flag_marketing_asn(asn, clouds),
            content_label=cls.label if cls else None)
        provenance_counts[label.provenance] = (
            provenance_counts.get(label.provenance, 0) + 1)
        spam_counts[label.spam] = spam_counts.get(label.spam, 0) + 1
        for flag in label.flags:
            flag_counts[flag] = flag_counts.get(flag, 0) + 1
    return {"provenance": provenance_counts, "spam": spam_counts,
            "flags": flag_counts}


def _sector_stats(store: CorpusStore, sector_map: dict[str, str],
                  classifications: dict[str, Classification],
                  pareto_table, profiles, flows, cfg: AuditConfig) -> dict:
    """Aggregate statistics block for sector_stats.json."""
    labels = ["promotional", "crm", "alert"]
    per_sector: dict[str, dict[str, int]] = {}
    totals_by_sector: dict[str, list[float]] = {}
    for service in store.services():
        records = store.service_records(service)
        sector = _resolve_sector(service, records, sector_map)
        bucket = per_sector.setdefault(sector, dict.fromkeys(labels, 0))
        for rec in records:
            cls = classifications.get(rec.message_id)
            if cls is not None:
                bucket[cls.label] += 1
        totals_by_sector.setdefault(sector, []).append(float(len(records)))

    sectors = sorted(per_sector)
    contingency = ContingencyTable(
        row_labels=sectors, col_labels=labels,
        counts=[[per_sector[s][lab] for lab in labels] for s in sectors])

    stats: dict = {
        "contingency": {
            "rows": sectors, "cols": labels, "counts": contingency.counts,
        },
    }

    def attempt(name: str, fn):
        try:
            stats[name] = fn().to_dict()
        except ValueError as exc:
            stats[name] = None
            stats.setdefault("notes", []).append(f"{name}: {exc}")

    groups = [totals_by_sector[s] for s in sectors]
    attempt("chi_squared", lambda: chi_squared_independence(contingency))
    attempt("anova", lambda: one_way_anova(groups))
    attempt("kruskal_wallis", lambda: kruskal_wallis(groups))

    per_company_totals = [float(len(store.service_records(s)))
                          for s in store.services()]
    try:
        stats["descriptive"] = descriptive(per_company_totals,
                                           convention=cfg.moment_convention)
    except ValueError as exc:
        stats["descriptive"] = None
        stats.setdefault("notes", []).append(f"descriptive: {exc}")

    stats["pareto"] = {
        "total": pareto_table.total,
        "top_10_share": pareto_table.top_k_share(10),
        "n_domains": len(pareto_table.entries),
    }
    try:
        stats["ip_hopping"] = ip_hopping_correlation(profiles)
    except ValueError as exc:
        stats["ip_hopping"] = None
        stats.setdefault("notes", []).append(f"ip_hopping: {exc}")
    stats["asn_concentration"] = [
        {"asn": label, "emails": volume, "cumulative_share": share}
        for label, volume, share in asn_volume_concentration(flows)]
    return stats


def run_analyze(cfg: AuditConfig) -> dict:
    """Produce the ten analysis artifacts from the ingested corpus."""
    out = _out_dir(cfg)
    store = _require_corpus(cfg)
    classifications = _load_classifications(cfg, store)

    asn_table = load_ip2asn(cfg.ip2asn_path) if cfg.ip2asn_path else AsnTable()
    abuse = load_abuse_reports(cfg.abuse_path) if cfg.abuse_path else {}
    providers = _load_providers(cfg.provider_list_path, "marketing_providers.txt")
    clouds = _load_providers(cfg.cloud_list_path, "cloud_providers.txt")
    org_map = ServiceOrgMap.load(cfg.org_map_path) if cfg.org_map_path else None
    sector_map = _load_sector_map(cfg.sector_map_path)

    profiles, flows = build_sender_profiles(store, asn_table, abuse, providers)

    # pareto.csv over root domains of parsed mail
    domain_counts = [(domain, float(len(records)))
                     for domain, records in store.by_root_domain.items()]
    if not domain_counts:
        raise ValueError("no parsed mail with a sender domain; nothing to rank")
    pareto_table = pareto(domain_counts)
    _write_csv(out / "pareto.csv",
               ["rank", "root_domain", "emails", "share", "cumulative_share"],
               [[i + 1, e.name, int(e.value), e.share, e.cumulative_share]
                for i, e in enumerate(pareto_table.entries)])

    # temporal artifacts on the whole-inbox series
    series = build_daily_series(store)
    bins = spectrum_bins(series, sigma=cfg.peak_sigma)
    _write_csv(out / "spectrum.csv",
               ["frequency", "magnitude", "period", "is_peak"],
               [[b.frequency, b.magnitude, b.period_days, int(b.is_peak)]
                for b in bins])

    dec = decompose_additive(series, period=cfg.decomposition_period)
    dates = series.dates()
    _write_csv(out / "decomposition.csv",
               ["day", "observed", "trend", "seasonal", "residual"],
               [[dates[i].isoformat(),
                 float(series.values[i]),
                 float(dec.trend[i]) if np.isfinite(dec.trend[i]) else "",
                 float(dec.seasonal[i]),
                 float(dec.residual[i]) if np.isfinite(dec.residual[i]) else ""]
                for i in range(len(series.values))])

    matrix = hour_day_matrix(store)
    _write_csv(out / "heatmap.csv", ["dow", "hour", "count"],
               [[dow, hour, matrix[dow][hour]]
                for dow in range(7) for hour in range(24)])

    # clustering artifacts
    features = build_features(store, profiles, classifications)
    standardized = standardize(features.matrix)
    if cfg.pca_components:
        target = FixedComponents(cfg.pca_components)
    else:
        target = VarianceThreshold(cfg.pca_variance_threshold)
    pca = pca_fit(standardized.matrix, target)
    scores = pca.transform(standardized.matrix)
    selection = select_k(scores, k_min=cfg.k_min, k_max=cfg.k_max,
                         seed=cfg.seed, restarts=cfg.kmeans_restarts)

    _write_csv(out / "features.csv", ["company"] + FEATURE_NAMES,
               [[features.companies[i]] + [float(v) for v in features.matrix[i]]
                for i in range(len(features.companies))])
    _write_csv(out / "clusters.csv", ["company", "cluster", "pc1", "pc2"],
               [[features.companies[i], int(selection.labels[i]),
                 float(scores[i, 0]),
                 float(scores[i, 1]) if scores.shape[1] > 1 else 0.0]
                for i in range(len(features.companies))])

    loadings = loadings_report(pca, selection, FEATURE_NAMES, scores)
    loadings["selected_k"] = selection.k
    loadings["silhouette"] = selection.silhouette
    loadings["per_k_silhouette"] = {str(k): v for k, v
                                    in selection.per_k_silhouette.items()}
    warnings = []
    if selection.clamped:
        warnings.append("k range clamped to the company count")
    if features.no_content_companies:
        warnings.append("companies without classified mail: "
                        + ", ".join(features.no_content_companies))
    loadings["warnings"] = warnings
    _write_json(out / "loadings.json", loadings)

    _write_json(out / "sankey.json", flows.sankey)
    _write_json(out / "treemap.json", flows.treemap)

    stats = _sector_stats(store, sector_map, classifications, pareto_table,
                          profiles, flows, cfg)
    stats["provenance_summary"] = _provenance_summary(
        store, asn_table, providers, clouds, org_map, classifications)
    _write_json(out / "sector_stats.json", stats)

    return {
        "artifacts": ANALYZE_ARTIFACTS,
        "companies": len(features.companies),
        "selected_k": selection.k,
        "silhouette": selection.silhouette,
        "warnings": warnings,
    }


def run_report(cfg: AuditConfig) -> dict:
    """Full chain: ingest, classify, analyze, plus a combined report."""
    out = _out_dir(cfg)
    ingest = run_ingest(cfg)
    classify = run_classify(cfg)
    analyze = run_analyze(cfg)
    stats = json.loads((out / "sector_stats.json").read_text(encoding="utf-8"))
    report = {
        "ingest": ingest,
        "classification": classify,
        "analysis": analyze,
        "provenance_summary": stats.get("provenance_summary"),
        "artifacts": [CORPUS_FILE, INGEST_REPORT_FILE, CLASSIFICATIONS_FILE,
                      CLASSIFY_SUMMARY_FILE] + ANALYZE_ARTIFACTS,
    }
    _write_json(out / REPORT_FILE, report)
    return report
