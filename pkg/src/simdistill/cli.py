"""Command-line pipeline: gen, whiten, simdist, distill, eval, gradcheck.

Exit codes: 0 success, 2 configuration or usage error, 3 I/O or file-format
error, 4 rank-deficient whitening fit, 5 numeric failure during training,
6 dimension mismatch, 7 gradient-check failure.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from . import errors, figures, formats
from .config import ExperimentConfig, load_config
from .distill import gradient_check, student_forward, train
from .metrics import (
    SELF_SCORE,
    holdout_split,
    map_at_k,
    mean_ap,
    mrr,
    self_retrieval_relevance,
    RetrievalTask,
)
from .similarity import (
    angle_density,
    angle_histogram,
    ks_distance_to_theory,
    ks_distance_two_sample,
    pairwise_angle_sample,
)
from .synthgen import generate
from .tensor import l2_normalize_rows
from .whitening import fit_pca_whitening, identity_transform, whiten_pipeline

GRADCHECK_TOL = 1e-5


def _fail(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _teacher_files(data_dir: Path) -> list[Path]:
    def index(p: Path) -> int:
        m = re.fullmatch(r"teacher_(\d+)\.emb", p.name)
        return int(m.group(1)) if m else 10**9

    found = sorted(data_dir.glob("teacher_*.emb"), key=index)
    if not found:
        raise errors.CorruptFile(f"no teacher_*.emb files in {data_dir}")
    return found


def cmd_gen(args) -> int:
    cfg = load_config(args.config)
    out = formats.ensure_dir(args.out)
    base, labels, teachers = generate(cfg.synth)
    formats.write_embeddings(out / "base.emb", base)
    formats.write_labels(out / "labels.csv", labels)
    for k, emb in enumerate(teachers):
        formats.write_embeddings(out / f"teacher_{k}.emb", emb)
    print(f"wrote {len(teachers)} teachers + base ({base.shape[0]} rows) to {out}")
    return 0


def cmd_whiten(args) -> int:
    x = formats.read_embeddings(args.input)
    n_c = args.n_c if args.n_c is not None else x.shape[1]
    normalized = l2_normalize_rows(x)
    transform = fit_pca_whitening(normalized, n_c, args.eps_rel)
    formats.write_transform(args.transform, transform)
    formats.write_embeddings(args.output, whiten_pipeline(transform, x))
    print(f"s_sig={transform.significant} warning={int(transform.warning)}")
    if transform.warning:
        print(
            f"warning: n_c={n_c} exceeds the {transform.significant} significant "
            "components; trailing directions are noise-dominated",
            file=sys.stderr,
        )
    return 0


def cmd_simdist(args) -> int:
    paths = [Path(p) for p in args.embeddings]
    samples = []
    lines = []
    for idx, path in enumerate(paths):
        emb = formats.read_embeddings(path)
        dim = emb.shape[1]
        angles = pairwise_angle_sample(emb, args.pairs, [args.seed, idx])
        centers, density = angle_histogram(angles, args.bins)
        theory = angle_density(dim, centers)
        ks = ks_distance_to_theory(angles, dim)
        samples.append(angles)
        lines.append(
            f"# file\t{path.name}\tdim\t{dim}\tpairs\t{args.pairs}\tks_theory\t{ks:.9g}"
        )
        lines.append("bin_center\tdensity\ttheory")
        for c, d, t in zip(centers, density, theory):
            lines.append(f"{c:.9g}\t{d:.9g}\t{t:.9g}")
        lines.append("")
        if args.plot:
            out = Path(args.out)
            fig_path = out.parent / f"{out.stem}_{path.stem}.png"
            figures.save_angle_figure(fig_path, centers, density, theory, path.name)
    lines.append("# pairwise_ks")
    lines.append("file\t" + "\t".join(p.name for p in paths))
    for i, path in enumerate(paths):
        row = [path.name]
        for j in range(len(paths)):
            d = 0.0 if i == j else ks_distance_two_sample(samples[i], samples[j])
            row.append(f"{d:.9g}")
        lines.append("\t".join(row))
    with open(args.out, "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"wrote {args.out}")
    return 0


def _load_dataset(cfg: ExperimentConfig, data_dir: Path):
    base = formats.read_embeddings(data_dir / "base.emb")
    labels = formats.read_labels(data_dir / "labels.csv")
    if labels.shape[0] != base.shape[0]:
        raise errors.ShapeMismatch("labels.csv row count does not match base.emb")
    files = _teacher_files(data_dir)
    if cfg.teacher_subset is not None:
        try:
            files = [files[i] for i in cfg.teacher_subset]
        except IndexError as exc:
            raise errors.BadConfig(f"train.teachers index out of range: {exc}") from exc
    teachers = [formats.read_embeddings(p) for p in files]
    for p, t in zip(files, teachers):
        if t.shape[0] != base.shape[0]:
            raise errors.ShapeMismatch(f"{p.name} is not row-aligned with base.emb")
    return base, labels, teachers, files


def _fit_transforms(cfg: ExperimentConfig, teachers, files, train_idx):
    """Load teacher_k.wht when present, else fit on the training rows."""
    transforms = []
    for path, emb in zip(files, teachers):
        if not cfg.whitening.enabled:
            transforms.append(identity_transform(emb.shape[1]))
            continue
        wht = path.with_suffix(".wht")
        if wht.exists():
            transforms.append(formats.read_transform(wht))
        else:
            normalized = l2_normalize_rows(emb[train_idx])
            transforms.append(
                fit_pca_whitening(normalized, cfg.n_c, cfg.whitening.eps_rel)
            )
    return transforms


def cmd_distill(args) -> int:
    cfg = load_config(args.config)
    data_dir = Path(args.data)
    base, labels, teachers, files = _load_dataset(cfg, data_dir)
    train_idx, _ = holdout_split(labels, cfg.eval.holdout_per_class)
    transforms = _fit_transforms(cfg, teachers, files, train_idx)

    mrr_rows = []

    def on_batch(step, teacher_sims, fused):
        mrr_rows.append((step, mrr(fused), [mrr(s) for s in teacher_sims]))

    head, history = train(
        cfg.train,
        base[train_idx],
        labels[train_idx],
        [t[train_idx] for t in teachers],
        transforms,
        on_batch=on_batch if args.out_mrr else None,
    )
    formats.write_student(args.out_student, head)
    formats.write_history_tsv(args.out_history, history)
    if args.plot:
        figures.save_history_figure(Path(args.out_history).with_suffix(".png"), history)
    if args.out_mrr:
        n_teachers = len(teachers)
        with open(args.out_mrr, "w") as f:
            f.write("step\tfused\t" + "\t".join(f"teacher_{k}" for k in range(n_teachers)) + "\n")
            for step, fused_val, teacher_vals in mrr_rows:
                cells = [str(step), f"{fused_val:.9g}"] + [f"{v:.9g}" for v in teacher_vals]
                f.write("\t".join(cells) + "\n")
        if args.plot:
            steps = [r[0] for r in mrr_rows]
            per_teacher = [[r[2][k] for r in mrr_rows] for k in range(n_teachers)]
            fused_series = [r[1] for r in mrr_rows]
            figures.save_mrr_figure(
                Path(args.out_mrr).with_suffix(".png"), steps, per_teacher, fused_series
            )
    final_loss = history[-1][2]
    print(f"trained {cfg.train.steps} steps, final loss {final_loss:.6f}")
    return 0


def _eval_subset(cfg: ExperimentConfig, labels, which: str):
    train_idx, holdout_idx = holdout_split(labels, cfg.eval.holdout_per_class)
    if which == "all":
        return np.arange(labels.shape[0])
    if which == "train":
        return train_idx
    if holdout_idx.size == 0:
        raise errors.BadConfig("holdout subset is empty (eval.holdout_per_class is 0)")
    return holdout_idx


def _pair_indices(labels_subset):
    """First two items of each class in the subset, for the MRR batch."""
    x_idx, y_idx = [], []
    for lab in np.unique(labels_subset):
        members = np.nonzero(labels_subset == lab)[0]
        if members.size >= 2:
            x_idx.append(members[0])
            y_idx.append(members[1])
    return np.asarray(x_idx, dtype=np.intp), np.asarray(y_idx, dtype=np.intp)


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    data_dir = Path(args.data)
    labels_all = formats.read_labels(data_dir / "labels.csv")
    idx = _eval_subset(cfg, labels_all, args.subset)
    labels = labels_all[idx]

    if args.student:
        if args.embeddings:
            raise errors.BadConfig("give either --student or embedding files, not both")
        head = formats.read_student(args.student)
        base = formats.read_embeddings(data_dir / "base.emb")
        emb = student_forward(head, base[idx])
        scores = emb @ emb.T
    else:
        if not args.embeddings:
            raise errors.BadConfig("need --student or at least one embedding file")
        if len(args.embeddings) > 1 and not args.ensemble_mean:
            raise errors.BadConfig("multiple embedding files require --ensemble-mean")
        sets = []
        for p in args.embeddings:
            emb = formats.read_embeddings(p)
            if emb.shape[0] != labels_all.shape[0]:
                raise errors.ShapeMismatch(f"{p} is not row-aligned with labels.csv")
            sets.append(l2_normalize_rows(emb)[idx])
        scores = np.zeros((idx.size, idx.size))
        for emb in sets:
            scores += emb @ emb.T
        scores /= len(sets)
        emb = sets[0]

    x_idx, y_idx = _pair_indices(labels)
    pair_mrr = mrr(scores[np.ix_(x_idx, y_idx)]) if x_idx.size else float("nan")
    np.fill_diagonal(scores, SELF_SCORE)
    task = RetrievalTask(emb, emb, self_retrieval_relevance(labels))
    rows = [("map", mean_ap(task, scores))]
    for k in cfg.eval.ks:
        rows.append((f"map@{k}", map_at_k(task, scores, k)))
    rows.append(("mrr", pair_mrr))
    formats.write_metrics_tsv(args.out, rows)
    for name, value in rows:
        print(f"{name}\t{value:.6f}")
    return 0


def cmd_gradcheck(args) -> int:
    cfg = load_config(args.config)
    print("loss_kind\tmax_rel_err")
    worst = 0.0
    for kind in ("kl", "ed", "cl"):
        err = gradient_check(kind, cfg.train, seed=cfg.train.seed, corrupt=args.corrupt)
        worst = max(worst, err)
        print(f"{kind}\t{err:.3g}")
    if worst >= GRADCHECK_TOL:
        _fail(f"gradient check failed: max relative error {worst:.3g} >= {GRADCHECK_TOL}")
        return 7
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simdistill",
        description="Whitening-based multi-teacher similarity distillation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate the synthetic benchmark")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("whiten", help="fit PCA whitening for one embedding file")
    p.add_argument("--input", required=True)
    p.add_argument("--n-c", type=int, default=None, help="output dim (default: input dim)")
    p.add_argument("--eps-rel", type=float, default=1e-6)
    p.add_argument("--transform", required=True, help="output transform file")
    p.add_argument("--output", required=True, help="output whitened embeddings")
    p.set_defaults(func=cmd_whiten)

    p = sub.add_parser("simdist", help="angle-distribution report for embedding files")
    p.add_argument("embeddings", nargs="+")
    p.add_argument("--pairs", type=int, default=100000)
    p.add_argument("--bins", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plot", dest="plot", action="store_false")
    p.set_defaults(func=cmd_simdist)

    p = sub.add_parser("distill", help="train the student head")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-student", required=True)
    p.add_argument("--out-history", required=True)
    p.add_argument("--out-mrr", default=None, help="optional per-batch MRR report")
    p.add_argument("--no-plot", dest="plot", action="store_false")
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("eval", help="retrieval metrics for a student or embeddings")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--student", default=None)
    p.add_argument("embeddings", nargs="*")
    p.add_argument("--ensemble-mean", action="store_true")
    p.add_argument("--subset", choices=("all", "train", "holdout"), default="all")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of all loss gradients")
    p.add_argument("--config", required=True)
    p.add_argument(
        "--corrupt",
        action="store_true",
        help="inject a gradient error (negative control; must exit 7)",
    )
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except errors.RankDeficient as exc:
        _fail(str(exc))
        return 4
    except errors.NumericFailure as exc:
        _fail(str(exc))
        return 5
    except (errors.DimMismatch, errors.ShapeMismatch) as exc:
        _fail(str(exc))
        return 6
    except errors.CorruptFile as exc:
        _fail(str(exc))
        return 3
    except errors.DataError as exc:
        _fail(str(exc))
        return 2
    except OSError as exc:
        _fail(str(exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
