"""Command orchestration over the library modules.

Each command reads its inputs from a PipelineConfig, writes fixed-name
artifacts under the configured output directory, and never mutates its
input files:

    learn-dict   embedding -> dict.txt
    encode       embedding + dict.txt -> codes.txt
    train        embedding (+ dict/codes, learned if absent)
                 -> filter.params, trace.csv
    denoise      embedding + filter.params -> denoised.txt
    eval         embedding + datasets -> report.csv
    sweep        lambda x gamma grid -> sweep.csv (+ per-cell subdirs)
    depth-sweep  filter depths -> sweep.csv
    synth        -> noisy.txt, clean.txt, pairs.tsv, choices.tsv

All randomness is seeded through config, so identical config produces
byte-identical artifacts.
"""

import itertools
import os

from .config import PipelineConfig
from .datasets import load_dataset_file
from .denoiser import (
    TrainConfig,
    apply_denoising,
    load_filter_params,
    save_filter_params,
    train_denoiser,
    write_trace,
)
from .embeddings import load_embedding, write_embedding_text
from .errors import ConfigError, DataError
from .evaluation import (
    evaluate_multiple_choice,
    evaluate_np_bracketing,
    evaluate_similarity,
    write_reports,
)
from .sparse import (
    Dictionary,
    LassoConfig,
    encode_all,
    learn_dictionary,
    read_matrix_text,
    write_matrix_text,
)
from .synthetic import (
    generate_synthetic_benchmark,
    write_choices_tsv,
    write_pairs_tsv,
)

COMMANDS = (
    "learn-dict",
    "encode",
    "train",
    "denoise",
    "eval",
    "sweep",
    "depth-sweep",
    "synth",
)


def _require_file(path):
    if not os.path.exists(path):
        raise DataError(f"missing input: {path}")
    return path


def _out_dir(cfg):
    out = cfg.get_str("out_dir", default=".")
    os.makedirs(out, exist_ok=True)
    return out


def _load_embedding_cfg(cfg, key="embedding"):
    path = _require_file(cfg.get_str(key))
    fmt = cfg.get_str("format", default="text")
    lowercase = cfg.get_bool("lowercase", default=False)
    if fmt == "text":
        return load_embedding(path, fmt="text", header="auto",
                              lowercase=lowercase)
    if fmt == "glove":
        return load_embedding(path, fmt="text", header=False,
                              lowercase=lowercase)
    if fmt == "binary":
        return load_embedding(path, fmt="binary", lowercase=lowercase)
    raise ConfigError(f"config key format: unknown format {fmt!r}")


def _lasso_cfg(cfg):
    return LassoConfig(
        lambd=cfg.get_float("lambda", default=1e-6),
        max_iters=cfg.get_int("lasso_iters", default=200),
        tol=cfg.get_float("lasso_tol", default=1e-8),
    )


def _train_cfg(cfg, mode=None, depth=None):
    return TrainConfig(
        alpha=cfg.get_float("alpha", default=0.5),
        batch_size=cfg.get_int("batch_size", default=100),
        epochs=cfg.get_int("epochs", default=50),
        depth=cfg.get_int("depth", default=3) if depth is None else depth,
        adadelta_rho=cfg.get_float("adadelta_rho", default=0.95),
        adadelta_eps=cfg.get_float("adadelta_eps", default=1e-6),
        dropout_in=cfg.get_float("dropout_in", default=0.5),
        dropout_out=cfg.get_float("dropout_out", default=0.2),
        seed=cfg.get_int("seed", default=0),
        mode=cfg.get_str("mode", default="complete") if mode is None
        else mode,
    )


def _atom_count(cfg, emb_dim, mode):
    """K from config: explicit atoms, else gamma * L, else L (complete)."""
    if cfg.has("atoms"):
        k = cfg.get_int("atoms")
        if k < 1:
            raise ConfigError("config key atoms: must be >= 1")
        return k
    if cfg.has("gamma"):
        gamma = cfg.get_float("gamma")
        if gamma <= 0:
            raise ConfigError("config key gamma: must be > 0")
        return max(1, int(round(gamma * emb_dim)))
    if mode == "complete":
        return emb_dim
    raise ConfigError(
        "overcomplete mode needs config key atoms or gamma"
    )


def _learn_dictionary(cfg, emb, atoms):
    return learn_dictionary(
        emb,
        atoms,
        _lasso_cfg(cfg),
        outer_iters=cfg.get_int("dict_iters", default=20),
        seed=cfg.get_int("seed", default=0),
    )


def cmd_learn_dict(cfg):
    emb = _load_embedding_cfg(cfg)
    mode = cfg.get_str("mode", default="complete")
    atoms = _atom_count(cfg, emb.dim, mode)
    dictionary = _learn_dictionary(cfg, emb, atoms)
    out = _out_dir(cfg)
    with open(os.path.join(out, "dict.txt"), "wb") as fh:
        write_matrix_text(dictionary.data, fh)
    return dictionary


def cmd_encode(cfg):
    emb = _load_embedding_cfg(cfg)
    out = _out_dir(cfg)
    dict_path = cfg.get_str("dict", default=os.path.join(out, "dict.txt"))
    with open(_require_file(dict_path), "rb") as fh:
        dictionary = Dictionary(read_matrix_text(fh))
    if dictionary.dim != emb.dim:
        raise DataError(
            f"dictionary dim {dictionary.dim} != embedding dim {emb.dim}"
        )
    codes = encode_all(emb, dictionary, _lasso_cfg(cfg))
    with open(os.path.join(out, "codes.txt"), "wb") as fh:
        write_matrix_text(codes.data, fh)
    return codes


def _ensure_dictionary(cfg, emb, out, mode):
    """Load the dictionary artifact, learning and writing it if absent."""
    dict_path = cfg.get_str("dict", default=os.path.join(out, "dict.txt"))
    if os.path.exists(dict_path):
        with open(dict_path, "rb") as fh:
            return Dictionary(read_matrix_text(fh))
    atoms = _atom_count(cfg, emb.dim, mode)
    dictionary = _learn_dictionary(cfg, emb, atoms)
    with open(dict_path, "wb") as fh:
        write_matrix_text(dictionary.data, fh)
    return dictionary


def _ensure_codes(cfg, emb, dictionary, out):
    codes_path = cfg.get_str("codes", default=os.path.join(out, "codes.txt"))
    if os.path.exists(codes_path):
        with open(codes_path, "rb") as fh:
            return read_matrix_text(fh)
    codes = encode_all(emb, dictionary, _lasso_cfg(cfg))
    with open(codes_path, "wb") as fh:
        write_matrix_text(codes.data, fh)
    return codes.data


def cmd_train(cfg):
    emb = _load_embedding_cfg(cfg)
    out = _out_dir(cfg)
    tc = _train_cfg(cfg)
    dictionary = _ensure_dictionary(cfg, emb, out, tc.mode)
    if dictionary.dim != emb.dim:
        raise DataError(
            f"dictionary dim {dictionary.dim} != embedding dim {emb.dim}"
        )
    Z = None
    if tc.mode == "overcomplete":
        Z = _ensure_codes(cfg, emb, dictionary, out)
    params, trace = train_denoiser(emb, dictionary, Z=Z, cfg=tc)
    with open(os.path.join(out, "filter.params"), "wb") as fh:
        save_filter_params(params, fh)
    with open(os.path.join(out, "trace.csv"), "w", encoding="utf-8") as fh:
        write_trace(trace, fh)
    return params, trace


def cmd_denoise(cfg):
    emb = _load_embedding_cfg(cfg)
    out = _out_dir(cfg)
    filter_path = cfg.get_str(
        "filter", default=os.path.join(out, "filter.params")
    )
    with open(_require_file(filter_path), "rb") as fh:
        params = load_filter_params(fh)
    denoised = apply_denoising(emb, params)
    with open(os.path.join(out, "denoised.txt"), "wb") as fh:
        write_embedding_text(denoised, fh, precision=9)
    return denoised


def _eval_reports(cfg, emb):
    lowercase = cfg.get_bool("lowercase_datasets", default=True)
    seed = cfg.get_int("seed", default=0)
    reports = []
    for path in cfg.get_list("pairs", default=[]):
        ds = load_dataset_file(_require_file(path), "pairs", lowercase)
        reports.append(evaluate_similarity(emb, ds))
    for path in cfg.get_list("choices", default=[]):
        ds = load_dataset_file(_require_file(path), "choices", lowercase)
        reports.append(evaluate_multiple_choice(emb, ds))
    for path in cfg.get_list("np", default=[]):
        ds = load_dataset_file(_require_file(path), "np", lowercase)
        reports.append(evaluate_np_bracketing(emb, ds, seed=seed))
    if not reports:
        raise ConfigError(
            "eval needs at least one of: pairs, choices, np"
        )
    return reports


def cmd_eval(cfg):
    emb = _load_embedding_cfg(cfg)
    out = _out_dir(cfg)
    reports = _eval_reports(cfg, emb)
    with open(os.path.join(out, "report.csv"), "w", encoding="utf-8") as fh:
        write_reports(reports, fh)
    return reports


def _dev_pairs(cfg):
    paths = cfg.get_list("pairs")
    if not paths:
        raise ConfigError("sweep needs config key pairs (dev dataset)")
    lowercase = cfg.get_bool("lowercase_datasets", default=True)
    return load_dataset_file(_require_file(paths[0]), "pairs", lowercase)


def hyperparam_sweep(cfg, lambdas, gammas, dev_ds):
    """Grid over (lambda, gamma): learn, encode, train overcomplete,
    evaluate dev correlation of the denoised embedding.

    Returns rows (lambda, gamma, value-or-None, status); the best row is
    the max value with ties broken toward smaller gamma, then smaller
    lambda. Cell failures are recorded and the sweep continues.
    """
    emb = _load_embedding_cfg(cfg)
    out = _out_dir(cfg)
    rows = []
    for lam, gam in itertools.product(lambdas, gammas):
        cell_dir = os.path.join(out, "sweep", f"lam{lam:g}_gam{gam:g}")
        os.makedirs(cell_dir, exist_ok=True)
        cell = PipelineConfig(dict(cfg.values))
        cell.override("lambda", repr(lam))
        cell.override("gamma", repr(gam))
        cell.override("out_dir", cell_dir)
        cell.override("mode", "overcomplete")
        cell.values.pop("atoms", None)
        cell.values.pop("dict", None)
        cell.values.pop("codes", None)
        try:
            atoms = _atom_count(cell, emb.dim, "overcomplete")
            dictionary = _learn_dictionary(cell, emb, atoms)
            with open(os.path.join(cell_dir, "dict.txt"), "wb") as fh:
                write_matrix_text(dictionary.data, fh)
            codes = encode_all(emb, dictionary, _lasso_cfg(cell))
            with open(os.path.join(cell_dir, "codes.txt"), "wb") as fh:
                write_matrix_text(codes.data, fh)
            tc = _train_cfg(cell, mode="overcomplete")
            params, trace = train_denoiser(
                emb, dictionary, Z=codes.data, cfg=tc
            )
            with open(os.path.join(cell_dir, "filter.params"), "wb") as fh:
                save_filter_params(params, fh)
            denoised = apply_denoising(emb, params)
            report = evaluate_similarity(denoised, dev_ds)
            rows.append((lam, gam, report.value, "ok"))
        except Exception as exc:  # cell failure stays in the table
            rows.append((lam, gam, None, f"error: {exc}"))
    return rows


def _best_row(rows, key_cols):
    """Index of the best-value row; ties by ascending key columns."""
    best = None
    for i, row in enumerate(rows):
        value = row[-2]
        if value is None:
            continue
        key = (-value,) + tuple(row[c] for c in key_cols)
        if best is None or key < best[0]:
            best = (key, i)
    return best[1] if best else None


def _write_sweep_csv(path, header, rows, best_idx):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + ",best\n")
        for i, row in enumerate(rows):
            cells = []
            for v in row[:-2]:
                cells.append(f"{v:g}" if isinstance(v, float) else str(v))
            value = row[-2]
            cells.append("" if value is None else f"{value:.6f}")
            status = row[-1].replace(",", ";")
            cells.append(status)
            cells.append("1" if i == best_idx else "0")
            fh.write(",".join(cells) + "\n")


def cmd_sweep(cfg):
    lambdas = cfg.get_list("lambdas", float)
    gammas = cfg.get_list("gammas", float)
    if not lambdas or not gammas:
        raise ConfigError("sweep needs non-empty lambdas and gammas")
    dev_ds = _dev_pairs(cfg)
    rows = hyperparam_sweep(cfg, lambdas, gammas, dev_ds)
    out = _out_dir(cfg)
    best_idx = _best_row(rows, key_cols=(1, 0))  # smaller gamma, then lambda
    _write_sweep_csv(
        os.path.join(out, "sweep.csv"),
        "lambda,gamma,value,status",
        rows,
        best_idx,
    )
    return rows, best_idx


def depth_sweep(cfg, depths, dev_ds):
    """Train one denoiser per depth on the same data/seed and evaluate.

    Returns rows (depth, value-or-None, status).
    """
    emb = _load_embedding_cfg(cfg)
    out = _out_dir(cfg)
    mode = cfg.get_str("mode", default="complete")
    dictionary = _ensure_dictionary(cfg, emb, out, mode)
    Z = None
    if mode == "overcomplete":
        Z = _ensure_codes(cfg, emb, dictionary, out)
    rows = []
    for depth in depths:
        try:
            if depth < 0:
                raise DataError("depth must be >= 0")
            tc = _train_cfg(cfg, depth=depth)
            params, trace = train_denoiser(emb, dictionary, Z=Z, cfg=tc)
            denoised = apply_denoising(emb, params)
            report = evaluate_similarity(denoised, dev_ds)
            rows.append((depth, report.value, "ok"))
        except Exception as exc:
            rows.append((depth, None, f"error: {exc}"))
    return rows


def cmd_depth_sweep(cfg):
    depths = cfg.get_list("depths", int, default=[0, 1, 2, 3, 4, 5, 6])
    if not depths:
        raise ConfigError("depth-sweep needs non-empty depths")
    dev_ds = _dev_pairs(cfg)
    rows = depth_sweep(cfg, depths, dev_ds)
    out = _out_dir(cfg)
    best_idx = _best_row(rows, key_cols=(0,))
    _write_sweep_csv(
        os.path.join(out, "sweep.csv"), "depth,value,status", rows, best_idx
    )
    return rows, best_idx


def cmd_synth(cfg):
    out = _out_dir(cfg)
    noisy, clean, pairs, choices = generate_synthetic_benchmark(
        V=cfg.get_int("V", default=2000),
        L=cfg.get_int("L", default=50),
        r=cfg.get_int("rank", default=10),
        sigma=cfg.get_float("sigma", default=0.3),
        seed=cfg.get_int("seed", default=1),
        n_pairs=cfg.get_int("n_pairs", default=500),
        n_questions=cfg.get_int("n_questions", default=200),
    )
    with open(os.path.join(out, "noisy.txt"), "wb") as fh:
        write_embedding_text(noisy, fh, precision=9)
    with open(os.path.join(out, "clean.txt"), "wb") as fh:
        write_embedding_text(clean, fh, precision=9)
    with open(os.path.join(out, "pairs.tsv"), "wb") as fh:
        write_pairs_tsv(pairs, fh)
    with open(os.path.join(out, "choices.tsv"), "wb") as fh:
        write_choices_tsv(choices, fh)
    return noisy, clean, pairs, choices


_DISPATCH = {
    "learn-dict": cmd_learn_dict,
    "encode": cmd_encode,
    "train": cmd_train,
    "denoise": cmd_denoise,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "depth-sweep": cmd_depth_sweep,
    "synth": cmd_synth,
}


def run_pipeline(command, cfg):
    if command not in _DISPATCH:
        raise ConfigError(f"unknown command: {command!r}")
    return _DISPATCH[command](cfg)
