"""Stage orchestration: train, generate, probe, sweep, overlap, contours.

Every stage writes below the configured output directory and is a pure
function of the configuration, so two runs from one manifest agree byte for
byte. Stages whose inputs are missing run their prerequisites first.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from . import analysis as A
from . import mediation as M
from .config import ExperimentConfig, RunManifest, atomic_write, read_manifest, sha256_file, write_manifest
from .errors import DataError
from .model import Model, ModelConfig
from .seeds import derive_rng, derive_seed
from .stimuli import generate as G
from .stimuli.lexicon import Lexicon
from .stimuli.templates import BASELINES, get_template
from .train import TrainHyper, train
from .vocab import Vocabulary
from .weights_io import load_weights, save_weights

log = logging.getLogger(__name__)

MODEL_FILE = "model.agsc"
MANIFEST_FILE = "manifest.json"


def _key(language: str, structure: str, variant: str) -> str:
    return f"{language}-{structure}-{variant}"


class Run:
    """One experiment directory and the state shared by its stages."""

    def __init__(self, config: ExperimentConfig, jobs: int = 1):
        self.config = config
        self.jobs = max(1, int(jobs))
        self.out = Path(config.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = self._load_manifest()
        self._lexicon = None
        self._model = None
        self._stimuli: dict = {}

    # ------------------------------------------------------------ bookkeeping

    def _load_manifest(self) -> RunManifest:
        path = self.out / MANIFEST_FILE
        snap = self.config.to_json()
        if path.is_file():
            doc = read_manifest(path)
            if doc.get("config") == snap:
                return RunManifest(**{k: doc.get(k, {}) for k in ("inputs", "outputs", "stages", "wall_clock")},
                                   config=snap, version=__version__)
            log.info("configuration changed; starting a fresh manifest")
        return RunManifest(config=snap, version=__version__)

    def _record_inputs(self) -> None:
        paths = list(self.config.lexicons) or [str(p) for p in Lexicon.builtin_paths(self._all_languages())]
        if self.config.model_path:
            paths.append(self.config.model_path)
        if self.config.source and not self.config.source.endswith(".json"):
            paths.append(self.config.source)
        self.manifest.inputs = {str(Path(p).resolve()): sha256_file(p) for p in paths}

    def finish(self) -> Path:
        self._record_inputs()
        files = sorted(p for p in self.out.rglob("*") if p.is_file() and p.name != MANIFEST_FILE and not p.name.startswith("."))
        self.manifest.outputs = {}
        self.manifest.add_outputs(self.out, files)
        return write_manifest(self.manifest, self.out / MANIFEST_FILE)

    def stage(self, name: str, fn):
        """Run ``fn`` and record its status; failures are recorded, then re-raised."""
        start = time.perf_counter()
        log.info("stage %s started", name)
        try:
            result = fn()
        except Exception as exc:
            self.manifest.stage(name, "failed", time.perf_counter() - start, f"{type(exc).__name__}: {exc}")
            self.finish()
            raise
        elapsed = time.perf_counter() - start
        self.manifest.stage(name, "ok")
        self.manifest.wall_clock[name] = round(elapsed, 3)
        log.info("stage %s finished in %.1fs", name, elapsed)
        return result

    def write(self, rel: str, text: str) -> Path:
        return atomic_write(self.out / rel, text)

    def header(self) -> tuple[int, str]:
        return self.config.seed, __version__

    # ------------------------------------------------------------ inputs

    def _all_languages(self) -> list[str]:
        langs = list(self.config.languages)
        for lang in self.config.train_languages:
            if lang not in langs:
                langs.append(lang)
        return langs

    @property
    def lexicon(self) -> Lexicon:
        if self._lexicon is None:
            if self.config.lexicons:
                entries = []
                for p in self.config.lexicons:
                    entries.extend(Lexicon.load(p).entries)
                self._lexicon = Lexicon(entries)
            else:
                self._lexicon = Lexicon.builtin(self._all_languages())
        return self._lexicon

    def split(self) -> tuple[Lexicon, Lexicon]:
        return self.lexicon.split(derive_seed(self.config.seed, "split"), self.config.train_fraction)

    @property
    def model_label(self) -> str:
        cfg = self.model.config
        return f"{cfg.mode}-L{cfg.n_layers}-d{cfg.hidden_dim}" + ("-random" if self.config.random_init else "")

    @property
    def model(self) -> Model:
        if self._model is None:
            if self.config.random_init and not self.config.model_path:
                # the architecture is all an untrained baseline needs
                cfg, vocab = self._spec_config()
                model = Model.random_init(replace(cfg, seed=derive_seed(self.config.seed, "random-init") % 2**63), vocab)
            elif self.config.model_path:
                model = load_weights(self.config.model_path)
            else:
                path = self.out / MODEL_FILE
                if not path.is_file():
                    self.stage("train", self.train_model)
                model = load_weights(path)
            if self.config.random_init and self.config.model_path:
                cfg = replace(model.config, seed=derive_seed(self.config.seed, "random-init") % 2**63)
                model = Model.random_init(cfg, model.vocab)
            self._model = model
        return self._model

    # ------------------------------------------------------------ stages

    def _spec_config(self) -> tuple[ModelConfig, Vocabulary]:
        spec = self.config.train
        if spec is None:
            raise DataError("the configuration has no [train] section")
        vocab = G.build_vocabulary(self.lexicon)
        mcfg = ModelConfig(spec.mode, spec.n_layers, spec.hidden_dim, spec.n_heads, spec.ff_dim, len(vocab),
                           spec.max_len, seed=derive_seed(self.config.seed, "model") % 2**63)
        return mcfg, vocab

    def train_model(self) -> Path:
        mcfg, vocab = self._spec_config()
        spec = self.config.train
        train_lex, probe_lex = self.split()
        corpus = G.build_corpus(self.config.train_languages, train_lex, spec.corpus_size,
                                derive_rng(self.config.seed, "corpus"), probe_lex)
        hyper = TrainHyper(lr=spec.lr, batch_size=spec.batch_size, steps=spec.steps, mask_rate=spec.mask_rate,
                           warmup_frac=spec.warmup_frac)
        model = train(mcfg, corpus, vocab, hyper)
        return save_weights(model, self.out / MODEL_FILE)

    def cells(self):
        """``(language, structure, variant)`` triples this run probes."""
        for variant in self.config.variants:
            for lang in self.config.languages:
                for structure in self.config.structures:
                    if structure in BASELINES and (lang != "en" or variant != "original"):
                        continue
                    yield lang, structure, variant

    def _generate(self, lang: str, structure: str, variant: str) -> list:
        cfg = self.config
        _, probe_lex = self.split()
        rng = derive_rng(cfg.seed, "stimuli", lang, structure)
        if structure in BASELINES:
            mode = self._model_mode()
            slots = ("first", "second") if mode == "mlm" else ("first",)
            return G.generate_baseline_stimuli(structure, self.lexicon, cfg.max_n, rng, slots)
        stimuli = G.generate_agreement_stimuli(get_template(lang, structure), probe_lex, cfg.max_n, rng)
        if variant == "short":
            stimuli = G.short_word_variant(stimuli, self.lexicon)
        return stimuli

    def _model_mode(self) -> str:
        if self.config.train is not None and not self.config.model_path:
            return self.config.train.mode
        return self.model.config.mode

    def generate_stimuli(self) -> list[Path]:
        paths = []
        for cell in self.cells():
            stimuli = self._generate(*cell)
            text = "".join(json.dumps(s.to_json(), ensure_ascii=False, sort_keys=True) + "\n" for s in stimuli)
            paths.append(self.write(f"stimuli/{_key(*cell)}.jsonl", text))
            self._stimuli[cell] = stimuli
        return paths

    def stimuli(self, cell) -> list:
        if cell not in self._stimuli:
            path = self.out / f"stimuli/{_key(*cell)}.jsonl"
            if not path.is_file():
                self.stage("gen-stimuli", self.generate_stimuli)
            self._stimuli[cell] = G.read_jsonl(path)
        return self._stimuli[cell]

    def probe(self) -> list[Path]:
        seed, version = self.header()
        totals = []
        for cell in self.cells():
            stimuli = self.stimuli(cell)
            log.info("probing %s (%d stimuli)", _key(*cell), len(stimuli))
            table = M.all_neuron_nies(self.model, stimuli, self.config.position_policy, self.jobs)
            te = M.total_effect(self.model, stimuli, self.jobs)
            self.write(f"effects/{_key(*cell)}.csv", M.effect_table_csv(table, seed, version))
            self.write(f"effects/{_key(*cell)}.detail.jsonl", M.effect_detail_jsonl(table))
            totals.append({"language": cell[0], "structure": cell[1], "word_variant": cell[2], "te_mean": te.te_mean,
                           "n_stimuli": len(stimuli), "te": te.per_stimulus,
                           "log_y_null": te.log_y_null, "log_y_swap": te.log_y_swap})
        self.write("effects/totals.json", json.dumps({"seed": seed, "version": version, "totals": totals},
                                                      indent=1, sort_keys=True) + "\n")
        return [self.out / "effects"]

    def effect_table(self, cell) -> M.EffectTable:
        base = self.out / f"effects/{_key(*cell)}"
        if not Path(str(base) + ".csv").is_file():
            self.stage("probe", self.probe)
        return M.read_effect_table(str(base) + ".csv", str(base) + ".detail.jsonl")

    def totals(self) -> dict:
        path = self.out / "effects/totals.json"
        if not path.is_file():
            self.stage("probe", self.probe)
        doc = json.loads(path.read_text(encoding="utf-8"))
        return {(t["language"], t["structure"], t["word_variant"]): t for t in doc["totals"]}

    def sweep(self) -> Path:
        seed, version = self.header()
        totals = self.totals()
        rows = ["language,structure,word_variant,model,k_step,te_mean,pct_to_te,pct_to_max"]
        for cell in self.cells():
            table = self.effect_table(cell)
            t = totals[cell]
            te = M.TotalEffect(cell[1], cell[0], t["te_mean"], t["te"], t["log_y_null"], t["log_y_swap"])
            curve = M.sparsity_sweep(self.model, self.stimuli(cell), self.config.k_step, table, te, self.jobs,
                                     self.config.position_policy)
            self.write(f"curves/{_key(*cell)}.csv", M.curve_csv(curve, seed, version))
            pct_te, pct_max = M.sparsity_metrics(curve)
            rows.append(",".join([*cell, self.model_label, str(curve.k_step), repr(te.te_mean), repr(pct_te), repr(pct_max)]))
        return self.write("sparsity.csv", f"# seed={seed} version={version}\n" + "\n".join(rows) + "\n")

    def overlap(self) -> list[Path]:
        seed, version = self.header()
        cfg = self.config
        n = self.model.config.n_neurons
        paths = []
        cells = list(self.cells())
        sets = {cell: A.top_neurons_global(self.effect_table(cell), cfg.top_n, label=cell[1]) for cell in cells}
        for variant in cfg.variants:
            for lang in cfg.languages:
                group = [sets[c] for c in cells if c[0] == lang and c[2] == variant]
                if len(group) >= 2:
                    mat = A.overlap_matrix(group, n, cfg.overlap_iters, derive_seed(seed, "overlap", lang, variant))
                    paths.append(self.write(f"overlap/structures-{lang}-{variant}.csv", mat.to_csv(seed, version)))
                    paths.append(self.write(f"overlap/structures-{lang}-{variant}.json", mat.to_json(seed, version)))
            for structure in cfg.structures:
                group = [replace(sets[c], label=c[0]) for c in cells if c[1] == structure and c[2] == variant]
                if len(group) >= 2:
                    mat = A.overlap_matrix(group, n, cfg.overlap_iters, derive_seed(seed, "overlap", structure, variant))
                    paths.append(self.write(f"overlap/languages-{structure}-{variant}.csv", mat.to_csv(seed, version)))
                    paths.append(self.write(f"overlap/languages-{structure}-{variant}.json", mat.to_json(seed, version)))
        if not paths:
            log.warning("overlap skipped: fewer than two structures and two languages")
        return paths

    def contours(self) -> list[Path]:
        seed, version = self.header()
        paths = []
        for cell in self.cells():
            table = self.effect_table(cell)
            attractors = [s.attractor_number for s in self.stimuli(cell)]
            series = A.contour_series(table, attractors, self.config.fraction)
            rows = [(cell[0], cell[1], name, values) for name, values in series.items()]
            paths.append(self.write(f"contours/{_key(*cell)}.csv", A.contour_csv(rows, seed, version)))
        return paths


def run_all(config: ExperimentConfig, jobs: int = 1) -> Run:
    """Every stage in order, then the report."""
    from .report import build_report

    run = Run(config, jobs)
    if config.train is not None and not config.model_path and not config.random_init:
        run.stage("train", run.train_model)
    for name, fn in (("gen-stimuli", run.generate_stimuli), ("probe", run.probe), ("sweep", run.sweep),
                     ("overlap", run.overlap), ("contours", run.contours)):
        run.stage(name, fn)
    run.stage("report", lambda: build_report(run.out))
    run.finish()
    return run

