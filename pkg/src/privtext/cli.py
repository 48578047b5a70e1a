"""Command-line front end: sanitize | reconstruct | attack | evaluate | pipeline | report.

One declarative JSON config plus flag overrides; all randomness flows from a
single root seed recorded in the run manifest. Outputs are written atomically
into the run directory, and no artifact embeds wall-clock state, so a rerun
with the same config and seed reproduces every file byte for byte.

Exit codes: 0 success, 2 config/validation error, 3 missing dependency,
4 fatal remote error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from privtext import attack as attack_mod
from privtext import budget as budget_mod
from privtext import corpus as corpus_mod
from privtext import metrics as metrics_mod
from privtext import scoring as scoring_mod
from privtext.corpus import Corpus, CorpusError, atomic_write_text
from privtext.embeddings import EmbeddingError, load_vectors
from privtext.mechanisms import (
    DIFFRACTOR,
    MAHALANOBIS,
    SANTEXT,
    SANTEXT_PLUS,
    CMP,
    MechanismConfig,
    MechanismError,
    build_mechanism,
)
from privtext.pipeline import SanitizationRun, sanitize_corpus
from privtext.reconstruct import (
    AuthError,
    EndpointConfig,
    FewShotPair,
    ReconstructError,
    reconstruct_corpus,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING_DEP = 3
EXIT_REMOTE = 4

_MECHANISMS = (CMP, MAHALANOBIS, DIFFRACTOR, SANTEXT, SANTEXT_PLUS)


class ConfigError(ValueError):
    pass


class MissingDependency(RuntimeError):
    pass


@dataclass
class RunConfig:
    dataset_name: str
    corpus: Path
    embeddings: Path | None
    embedding_dim: int
    mechanism: str
    mechanism_params: dict
    base_eps: list[float]
    mode: str
    seed: int
    output_dir: Path
    workers: int = 1
    holdout_pairs: int = 3
    endpoint: dict = field(default_factory=dict)
    evaluation: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def endpoint_config(self) -> EndpointConfig:
        ep = dict(self.endpoint)
        if not ep.get("base_url"):
            raise ConfigError("endpoint.base_url: missing (required for reconstruction)")
        if not ep.get("model"):
            raise ConfigError("endpoint.model: missing")
        return EndpointConfig(
            base_url=ep["base_url"],
            model=ep["model"],
            temperature=float(ep.get("temperature", 1.0)),
            max_retries=int(ep.get("max_retries", 3)),
            rate_limit_per_min=float(ep.get("rate_limit_per_min", 60.0)),
            api_key_env=ep.get("api_key_env", "PRIVTEXT_API_KEY"),
            max_tokens=int(ep.get("max_tokens", 1024)),
            timeout_s=float(ep.get("timeout_s", 120.0)),
            concurrency=int(ep.get("concurrency", 4)),
            backoff_base_s=float(ep.get("backoff_base_s", 1.0)),
        )

    def mechanism_config(self) -> MechanismConfig:
        params = dict(self.mechanism_params)
        if self.mechanism == SANTEXT_PLUS:
            params["plus"] = True
        try:
            return MechanismConfig(**params)
        except TypeError as exc:
            raise ConfigError(f"mechanism_params: {exc}") from exc


def load_config(path: str | Path, overrides: argparse.Namespace | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config: file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}")

    def pick(flag: str, key: str, default=None):
        if overrides is not None and getattr(overrides, flag, None) is not None:
            return getattr(overrides, flag)
        return raw.get(key, default)

    mechanism = pick("mechanism", "mechanism", CMP)
    if mechanism not in _MECHANISMS:
        raise ConfigError(f"mechanism: unknown {mechanism!r}; expected one of {_MECHANISMS}")

    eps_value = pick("eps", "base_eps", [1.0])
    if isinstance(eps_value, str):
        eps_value = [float(x) for x in eps_value.split(",")]
    if isinstance(eps_value, (int, float)):
        eps_value = [float(eps_value)]
    base_eps = [float(e) for e in eps_value]
    if not base_eps or any(e <= 0 for e in base_eps):
        raise ConfigError(f"base_eps: values must be positive, got {base_eps}")

    mode = raw.get("mode", "bounded")
    if mode not in (budget_mod.MODE_BOUNDED, budget_mod.MODE_UNBOUNDED):
        raise ConfigError(f"mode: expected bounded|unbounded, got {mode!r}")

    corpus_path = pick("corpus", "corpus")
    if not corpus_path:
        raise ConfigError("corpus: missing")
    corpus_path = Path(corpus_path)
    if not corpus_path.is_file():
        raise ConfigError(f"corpus: file not found: {corpus_path}")

    emb_value = pick("embeddings_path", "embeddings")
    embeddings = Path(emb_value) if emb_value else None

    endpoint = dict(raw.get("endpoint", {}))
    for flag, key in (
        ("endpoint", "base_url"),
        ("model", "model"),
        ("temperature", "temperature"),
        ("rate_limit", "rate_limit_per_min"),
    ):
        if overrides is not None and getattr(overrides, flag, None) is not None:
            endpoint[key] = getattr(overrides, flag)

    cfg = RunConfig(
        dataset_name=raw.get("dataset_name", corpus_path.stem),
        corpus=corpus_path,
        embeddings=embeddings,
        embedding_dim=int(raw.get("embedding_dim", 300)),
        mechanism=mechanism,
        mechanism_params=dict(raw.get("mechanism_params", {})),
        base_eps=base_eps,
        mode=mode,
        seed=int(pick("seed", "seed", 0)),
        output_dir=Path(pick("output_dir", "output_dir", "privtext-run")),
        workers=int(pick("workers", "workers", 1)),
        holdout_pairs=int(raw.get("holdout_pairs", 3)),
        endpoint=endpoint,
        evaluation=dict(raw.get("evaluation", {})),
        raw=raw,
    )
    cfg.mechanism_config()  # validate params early
    return cfg


def _require_embeddings(cfg: RunConfig):
    if cfg.embeddings is None:
        raise ConfigError("embeddings: missing (required for sanitization)")
    if not cfg.embeddings.is_file():
        raise ConfigError(f"embeddings: file not found: {cfg.embeddings}")
    store, report = load_vectors(cfg.embeddings, cfg.embedding_dim)
    if report.n_rejected:
        print(
            json.dumps({"vector_load": report.as_dict()}),
            file=sys.stderr,
        )
    return store


def _load_corpus(cfg: RunConfig) -> Corpus:
    corpus, report = corpus_mod.load_corpus_with_report(cfg.corpus, name=cfg.dataset_name)
    if report.errors:
        print(json.dumps({"corpus_load": report.as_dict()}), file=sys.stderr)
    return corpus


def _eps_tag(eps: float) -> str:
    return f"{eps:g}"


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Manifest:
    def __init__(self, cfg: RunConfig, command: str):
        self.data = {
            "command": command,
            "seed": cfg.seed,
            "dataset": cfg.dataset_name,
            "mechanism": cfg.mechanism,
            "mode": cfg.mode,
            "base_eps": cfg.base_eps,
            "config": cfg.raw,
            "artifacts": {},
        }
        self.out_dir = cfg.output_dir

    def record(self, name: str, path: Path) -> None:
        self.data["artifacts"][name] = {
            "path": path.name,
            "sha256": _sha256(path),
        }

    def write(self) -> None:
        atomic_write_text(
            self.out_dir / "manifest.json",
            json.dumps(self.data, indent=2, sort_keys=True) + "\n",
        )


# ---------------------------------------------------------------------------
# sanitize
# ---------------------------------------------------------------------------

def _sanitize_one_eps(cfg, corpus, store, eps, manifest, holdout=False):
    """Sanitize (optionally post-holdout) corpus at one base eps; write artifacts."""
    tag = _eps_tag(eps)
    avg = budget_mod.dataset_avg_words(corpus)  # pre-holdout average
    if cfg.mode == budget_mod.MODE_BOUNDED:
        policy = budget_mod.BudgetPolicy.bounded(eps, avg)
    else:
        policy = budget_mod.BudgetPolicy.unbounded(eps, avg)
    mech = build_mechanism(cfg.mechanism, store, cfg.mechanism_config())

    held: list = []
    target = corpus
    if holdout:
        held, target = corpus_mod.holdout_fewshot(corpus, cfg.holdout_pairs)

    out_dir = cfg.output_dir
    run = SanitizationRun(
        mechanism=mech,
        policy=policy,
        seed=cfg.seed,
        input=target,
        workers=cfg.workers,
        log_path=out_dir / f"runlog_eps{tag}.jsonl",
    )
    sanitized, ledger = sanitize_corpus(run)

    san_path = out_dir / f"sanitized_eps{tag}.jsonl"
    corpus_mod.save_corpus(sanitized, san_path)
    ledger_path = out_dir / f"ledger_eps{tag}.csv"
    ledger.save_csv(ledger_path)
    manifest.record(f"sanitized_eps{tag}", san_path)
    manifest.record(f"ledger_eps{tag}", ledger_path)
    manifest.record(f"runlog_eps{tag}", out_dir / f"runlog_eps{tag}.jsonl")

    pairs = []
    if holdout:
        held_corpus = Corpus(name="held", documents=tuple(held))
        held_run = SanitizationRun(mechanism=mech, policy=policy, seed=cfg.seed, input=held_corpus)
        held_sanitized, _ = sanitize_corpus(held_run)
        pairs = [
            FewShotPair(noisy=s.text, clean=h.text)
            for s, h in zip(held_sanitized.documents, held)
        ]
        pairs_path = out_dir / f"pairs_eps{tag}.jsonl"
        atomic_write_text(
            pairs_path,
            "".join(
                json.dumps({"noisy": p.noisy, "clean": p.clean}, ensure_ascii=False) + "\n"
                for p in pairs
            ),
        )
        manifest.record(f"pairs_eps{tag}", pairs_path)
    return sanitized, ledger, pairs, policy, mech


def cmd_sanitize(cfg: RunConfig) -> int:
    store = _require_embeddings(cfg)
    corpus = _load_corpus(cfg)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg, "sanitize")
    for eps in cfg.base_eps:
        _sanitize_one_eps(cfg, corpus, store, eps, manifest)
    manifest.write()
    return EXIT_OK


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------

def _load_pairs(path: Path) -> list[FewShotPair]:
    if not path.is_file():
        raise ConfigError(f"pairs: file not found: {path}")
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            pairs.append(FewShotPair(noisy=obj["noisy"], clean=obj["clean"]))
    if not pairs:
        raise ConfigError(f"pairs: file is empty: {path}")
    return pairs


def cmd_reconstruct(cfg: RunConfig, sanitized_path: Path, pairs_path: Path) -> int:
    if not sanitized_path.is_file():
        raise ConfigError(f"sanitized: file not found: {sanitized_path}")
    sanitized = corpus_mod.load_corpus(sanitized_path, name=f"{cfg.dataset_name}-sanitized")
    if len(sanitized) == 0:
        raise ConfigError("sanitized: corpus is empty")
    sanitized = sanitized.with_stage("sanitized")
    pairs = _load_pairs(pairs_path)
    endpoint = cfg.endpoint_config()
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg, "reconstruct")
    tag = _eps_tag(cfg.base_eps[0])
    audit_path = cfg.output_dir / f"audit_eps{tag}.jsonl"
    recon = reconstruct_corpus(
        sanitized,
        pairs,
        endpoint,
        audit_path=audit_path,
        required_pairs=cfg.holdout_pairs,
    )
    recon_path = cfg.output_dir / f"reconstructed_eps{tag}.jsonl"
    corpus_mod.save_corpus(recon, recon_path)
    manifest.record(f"reconstructed_eps{tag}", recon_path)
    manifest.record(f"audit_eps{tag}", audit_path)
    manifest.write()
    return EXIT_OK


# ---------------------------------------------------------------------------
# attack
# ---------------------------------------------------------------------------

def cmd_attack(cfg: RunConfig, train_path: Path, test_path: Path, adaptive: bool) -> int:
    train = corpus_mod.load_corpus(train_path, name="train")
    test = corpus_mod.load_corpus(test_path, name="test").with_stage("sanitized")
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    if adaptive:
        store = _require_embeddings(cfg)
        mech = build_mechanism(cfg.mechanism, store, cfg.mechanism_config())
        avg = budget_mod.dataset_avg_words(train)
        eps = cfg.base_eps[0]
        policy = (
            budget_mod.BudgetPolicy.bounded(eps, avg)
            if cfg.mode == budget_mod.MODE_BOUNDED
            else budget_mod.BudgetPolicy.unbounded(eps, avg)
        )
        report = attack_mod.run_adaptive_attack(train, test, mech, policy, cfg.seed)
    else:
        report = attack_mod.run_static_attack(train, test, seed=cfg.seed)
    out = cfg.output_dir / f"attack_{report.mode}.json"
    atomic_write_text(out, json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    print(json.dumps(report.as_dict()))
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def _corpus_subset(corpus: Corpus, ids: set[str], name: str) -> Corpus:
    docs = tuple(d for d in corpus.documents if d.id in ids)
    return Corpus(name=name, documents=docs, stage=corpus.stage)


def _scorer_for(cfg: RunConfig):
    ev = cfg.evaluation
    fixture = ev.get("embeddings_fixture")
    sidecar_url = ev.get("sidecar_url")
    if fixture:
        fixture = Path(fixture)
        if not fixture.is_file():
            raise MissingDependency(f"embeddings fixture not found: {fixture}")
        return scoring_mod.FixtureScorer.load(fixture)
    if sidecar_url:
        client = scoring_mod.SidecarClient(
            sidecar_url,
            embed_model=ev.get("embed_model", "all-MiniLM-L12-v2"),
            perplexity_model=ev.get("perplexity_model", "gpt2"),
        )
        try:
            health = client.health()
        except scoring_mod.ScoringError as exc:
            raise MissingDependency(f"sidecar unreachable: {exc}") from exc
        if health.get("status_code") != 200:
            raise MissingDependency(f"sidecar not ready: {health}")
        return client
    return None


def _evaluate_stage(
    cfg,
    report: metrics_mod.EvalReport,
    eps: float,
    stage_name: str,
    clean: Corpus,
    stage_corpus: Corpus,
    train_ids: set[str],
    test_ids: set[str],
    baselines: dict,
    scorer,
    mech,
    policy,
) -> dict:
    """One report row: Util/SS/Co/P(s)/P(a)/In/TO(s)/TO(a) for one stage."""
    has_labels = all(d.label is not None for d in clean.documents)
    stage_train = _corpus_subset(stage_corpus, train_ids, "stage-train")
    stage_test = _corpus_subset(stage_corpus, test_ids, "stage-test")
    clean_train = _corpus_subset(clean, train_ids, "clean-train")

    util = util_std = None
    to_static = to_adaptive = None
    if has_labels:
        util, util_std = attack_mod.run_utility_eval(
            stage_train,
            stage_test,
            seeds=(cfg.seed, cfg.seed + 1, cfg.seed + 2),
        )

    p_static = attack_mod.run_static_attack(clean_train, stage_test, seed=cfg.seed).micro_f1
    p_adaptive = attack_mod.run_adaptive_attack(
        clean_train, stage_test, mech, policy, cfg.seed
    ).micro_f1

    if has_labels and baselines["p_orig"] > 0 and baselines["util_orig"] > 0:
        to_static = metrics_mod.tradeoff(
            metrics_mod.TradeoffInputs(
                u_priv=util, u_orig=baselines["util_orig"], p_priv=p_static, p_orig=baselines["p_orig"]
            )
        )
        to_adaptive = metrics_mod.tradeoff(
            metrics_mod.TradeoffInputs(
                u_priv=util, u_orig=baselines["util_orig"], p_priv=p_adaptive, p_orig=baselines["p_orig"]
            )
        )

    ss = co = in_score = None
    if scorer is not None:
        orig_set = scoring_mod.embedding_set_for_corpus(clean, scorer)
        stage_set = scoring_mod.embedding_set_for_corpus(stage_corpus, scorer)
        ss = metrics_mod.semantic_similarity(orig_set, stage_set)
        in_score = metrics_mod.indistinguishability(orig_set, stage_set)
        co = metrics_mod.mean_perplexity([d.text for d in stage_corpus.documents], scorer)

    return report.add_row(
        dataset=cfg.dataset_name,
        mechanism=cfg.mechanism,
        eps=eps,
        stage=stage_name,
        util=util,
        util_std=util_std,
        ss=ss,
        co=co,
        p_static=p_static,
        p_adaptive=p_adaptive,
        indistinguishability=in_score,
        to_static=to_static,
        to_adaptive=to_adaptive,
    )


def cmd_evaluate(cfg: RunConfig) -> int:
    ev = cfg.evaluation
    semantic_wanted = bool(ev.get("semantic_metrics", True))
    full_clean = _load_corpus(cfg)
    avg = budget_mod.dataset_avg_words(full_clean)  # pre-holdout, matching sanitize-time policy

    missing: list[str] = []
    scorer = None
    if semantic_wanted:
        try:
            scorer = _scorer_for(cfg)
        except MissingDependency as exc:
            raise MissingDependency(f"SS/Co/In blocked: {exc}") from exc
        if scorer is None:
            raise MissingDependency(
                "SS/Co/In blocked: no embeddings fixture configured and no sidecar_url"
            )

    stage_files: dict[tuple[float, str], Path] = {}
    for eps in cfg.base_eps:
        tag = _eps_tag(eps)
        san = cfg.output_dir / f"sanitized_eps{tag}.jsonl"
        if san.is_file():
            stage_files[(eps, "mldp")] = san
        else:
            missing.append(str(san))
        recon = cfg.output_dir / f"reconstructed_eps{tag}.jsonl"
        if recon.is_file():
            stage_files[(eps, "reconstructed")] = recon
    if missing:
        raise MissingDependency("missing stage inputs: " + ", ".join(missing))

    # stage files from a pipeline run exclude the held-out few-shot documents;
    # stage files from a bare sanitize run cover the full corpus
    clean = full_clean
    first_stage = corpus_mod.load_corpus(next(iter(stage_files.values())))
    if first_stage.ids() != full_clean.ids() and len(full_clean) > cfg.holdout_pairs:
        _, clean = corpus_mod.holdout_fewshot(full_clean, cfg.holdout_pairs)

    store = _require_embeddings(cfg)
    mech = build_mechanism(cfg.mechanism, store, cfg.mechanism_config())

    test_fraction = float(ev.get("test_fraction", 0.1))
    split_seed = int(ev.get("split_seed", cfg.seed))
    train_split, test_split = corpus_mod.split_train_test(clean, test_fraction, split_seed)
    train_ids, test_ids = set(train_split.ids()), set(test_split.ids())

    has_labels = all(d.label is not None for d in clean.documents)
    util_orig = 0.0
    if has_labels:
        util_orig, _ = attack_mod.run_utility_eval(
            train_split, test_split, seeds=(cfg.seed, cfg.seed + 1, cfg.seed + 2)
        )
    p_orig = attack_mod.run_static_attack(train_split, test_split, seed=cfg.seed).micro_f1
    baselines = {"util_orig": util_orig, "p_orig": p_orig}

    report = metrics_mod.EvalReport()
    report.add_row(
        dataset=cfg.dataset_name,
        mechanism="original",
        eps=None,
        stage="original",
        util=util_orig if has_labels else None,
        p_static=p_orig,
    )

    manifest = Manifest(cfg, "evaluate")
    for eps in cfg.base_eps:
        policy = (
            budget_mod.BudgetPolicy.bounded(eps, avg)
            if cfg.mode == budget_mod.MODE_BOUNDED
            else budget_mod.BudgetPolicy.unbounded(eps, avg)
        )
        tag = _eps_tag(eps)
        stages_present: dict[str, Corpus] = {}
        for stage_name in ("mldp", "reconstructed"):
            path = stage_files.get((eps, stage_name))
            if path is None:
                continue
            stage_corpus = corpus_mod.load_corpus(path, name=f"{cfg.dataset_name}-{stage_name}")
            stage_corpus = stage_corpus.with_stage(
                "sanitized" if stage_name == "mldp" else "reconstructed"
            )
            if stage_corpus.ids() != clean.ids():
                raise ConfigError(
                    f"stage file {path.name} ids do not match the post-holdout corpus"
                )
            stages_present[stage_name] = stage_corpus
            _evaluate_stage(
                cfg,
                report,
                eps,
                stage_name,
                clean,
                stage_corpus,
                train_ids,
                test_ids,
                baselines,
                scorer,
                mech,
                policy,
            )
        if "mldp" in stages_present and "reconstructed" in stages_present:
            shift = metrics_mod.token_shift(
                stages_present["mldp"], stages_present["reconstructed"]
            )
            shift_path = cfg.output_dir / f"token_shift_eps{tag}.json"
            atomic_write_text(
                shift_path, json.dumps(shift.as_dict(), indent=2, sort_keys=True) + "\n"
            )
            manifest.record(f"token_shift_eps{tag}", shift_path)
        if scorer is not None and ev.get("projection", False):
            named = dict(stages_present)
            named["original"] = clean
            for stage_name, stage_corpus in named.items():
                es = scoring_mod.embedding_set_for_corpus(stage_corpus, scorer)
                authors = [d.author_id for d in stage_corpus.documents]
                proj_path = cfg.output_dir / f"projection_eps{tag}_{stage_name}.csv"
                atomic_write_text(proj_path, metrics_mod.projection_csv(es, authors))
                manifest.record(f"projection_eps{tag}_{stage_name}", proj_path)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    csv_path = cfg.output_dir / "report.csv"
    json_path = cfg.output_dir / "report.json"
    atomic_write_text(csv_path, report.to_csv())
    atomic_write_text(json_path, report.to_json())
    manifest.record("report_csv", csv_path)
    manifest.record("report_json", json_path)
    manifest.write()
    return EXIT_OK


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def cmd_pipeline(cfg: RunConfig) -> int:
    """sanitize -> reconstruct -> evaluate -> release (the post-processing recipe)."""
    store = _require_embeddings(cfg)
    corpus = _load_corpus(cfg)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    endpoint = cfg.endpoint_config()
    manifest = Manifest(cfg, "pipeline")

    for eps in cfg.base_eps:
        tag = _eps_tag(eps)
        sanitized, ledger, pairs, policy, mech = _sanitize_one_eps(
            cfg, corpus, store, eps, manifest, holdout=True
        )
        audit_path = cfg.output_dir / f"audit_eps{tag}.jsonl"
        recon = reconstruct_corpus(
            sanitized, pairs, endpoint, audit_path=audit_path, required_pairs=cfg.holdout_pairs
        )
        recon_path = cfg.output_dir / f"reconstructed_eps{tag}.jsonl"
        corpus_mod.save_corpus(recon, recon_path)
        manifest.record(f"reconstructed_eps{tag}", recon_path)
        manifest.record(f"audit_eps{tag}", audit_path)
        release_path = cfg.output_dir / f"release_eps{tag}.jsonl"
        corpus_mod.save_corpus(recon, release_path)
        manifest.record(f"release_eps{tag}", release_path)
    manifest.write()

    code = cmd_evaluate(cfg)
    if code != EXIT_OK:
        return code
    # cmd_evaluate wrote its own manifest; merge pipeline artifacts back in
    manifest.data["command"] = "pipeline"
    eval_manifest = json.loads((cfg.output_dir / "manifest.json").read_text())
    manifest.data["artifacts"].update(eval_manifest.get("artifacts", {}))
    manifest.write()
    return EXIT_OK


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(inputs: list[Path], out_path: Path) -> int:
    merged = metrics_mod.EvalReport()
    for path in inputs:
        if not path.is_file():
            raise ConfigError(f"report input not found: {path}")
        data = json.loads(path.read_text(encoding="utf-8"))
        for row in data.get("rows", []):
            merged.add_row(**row)
    atomic_write_text(out_path, merged.to_csv())
    print(f"wrote {out_path} ({len(merged.rows)} rows)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing / entry point
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="JSON run config")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--eps", default=None, help="comma-separated base eps override")
    sub.add_argument("--mechanism", default=None, choices=_MECHANISMS)
    sub.add_argument("--corpus", default=None)
    sub.add_argument("--embeddings-path", dest="embeddings_path", default=None)
    sub.add_argument("--output-dir", dest="output_dir", default=None)
    sub.add_argument("--workers", type=int, default=None)
    sub.add_argument("--endpoint", default=None, help="chat-completions base URL")
    sub.add_argument("--model", default=None)
    sub.add_argument("--temperature", type=float, default=None)
    sub.add_argument("--rate-limit", dest="rate_limit", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="privtext", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    for name in ("sanitize", "evaluate", "pipeline"):
        sub = subs.add_parser(name)
        _add_common(sub)

    sub = subs.add_parser("reconstruct")
    _add_common(sub)
    sub.add_argument("--sanitized", required=True, help="sanitized corpus JSONL")
    sub.add_argument("--pairs", required=True, help="few-shot pairs JSONL")

    sub = subs.add_parser("attack")
    _add_common(sub)
    sub.add_argument("--train", required=True, help="clean train corpus JSONL")
    sub.add_argument("--test", required=True, help="target test corpus JSONL")
    sub.add_argument("--adaptive", action="store_true")

    sub = subs.add_parser("report")
    sub.add_argument("--inputs", nargs="+", required=True)
    sub.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report([Path(p) for p in args.inputs], Path(args.out))
        cfg = load_config(args.config, overrides=args)
        if args.command == "sanitize":
            return cmd_sanitize(cfg)
        if args.command == "reconstruct":
            return cmd_reconstruct(cfg, Path(args.sanitized), Path(args.pairs))
        if args.command == "attack":
            return cmd_attack(cfg, Path(args.train), Path(args.test), args.adaptive)
        if args.command == "evaluate":
            return cmd_evaluate(cfg)
        if args.command == "pipeline":
            return cmd_pipeline(cfg)
        parser.error(f"unknown command {args.command}")
    except (
        ConfigError,
        CorpusError,
        EmbeddingError,
        MechanismError,
        budget_mod.BudgetError,
        metrics_mod.MetricError,
        attack_mod.AttackError,
    ) as exc:
        print(f"privtext: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingDependency, scoring_mod.ScoringError) as exc:
        print(f"privtext: missing dependency: {exc}", file=sys.stderr)
        return EXIT_MISSING_DEP
    except AuthError as exc:
        print(f"privtext: fatal endpoint error: {exc}", file=sys.stderr)
        return EXIT_REMOTE
    except ReconstructError as exc:
        print(f"privtext: fatal endpoint error: {exc}", file=sys.stderr)
        return EXIT_REMOTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
