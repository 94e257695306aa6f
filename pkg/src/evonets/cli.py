"""Command-line front end: generate | train | evaluate | export | extract-rules.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import sys
from pathlib import Path

import numpy as np

from .baseline import FnnConfig, train_fnn
from .cascade import FitConfig, cascade_to_dot, describe_cascade, train_ecnn
from .dataset import (Dataset, SplitSpec, gen_blobs, gen_surrogate_eeg, gen_xor,
                      load_csv, normalize_zscore, save_csv, split)
from .errors import DataError, TrainingError, UsageError
from .gmdh import GmdhConfig, gmdh_to_dot, to_polynomial_text, train_gmdh_layered, \
    train_gmdh_roulette
from .linear import (LinearMachine, LmdtConfig, aggregate_segments,
                     train_pairwise_tree, train_pocket_ratchet)
from .modelio import ModelBundle, load_model, save_model
from .ruletree import extract_rules, ruletree_to_dot, to_text

TRAIN_METHODS = ("ecnn", "gmdh-layered", "gmdh-roulette", "lm", "pairwise-dt",
                 "ruletree", "fnn")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    p = _Parser(prog="evonets",
                description="Self-organizing constructive classifiers: train, "
                            "evaluate, and export readable models.")
    sub = p.add_subparsers(dest="command")

    g = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    g.add_argument("kind", choices=["xor", "blobs", "surrogate-eeg"])
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--classes", type=int, default=None)
    g.add_argument("--spread", type=float, default=1.0)
    g.add_argument("--radius", type=float, default=3.0)
    g.add_argument("--relevant", type=int, default=4)
    g.add_argument("--irrelevant", type=int, default=68)
    g.add_argument("--separation", type=float, default=2.0)

    t = sub.add_parser("train", help="train a model and save it as JSON")
    t.add_argument("--method", required=True, choices=list(TRAIN_METHODS))
    t.add_argument("--data", required=True)
    t.add_argument("--label", default="y")
    t.add_argument("--out", required=True, help="model file to write")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--split", default="2/3:1/3",
                   help="fit/validation fractions, e.g. 2/3:1/3")
    t.add_argument("--no-stratify", action="store_true")
    t.add_argument("--report", default=None, help="per-pair CSV report (pairwise-dt)")
    t.add_argument("--kind", choices=["linear", "bilinear"], default="bilinear")
    t.add_argument("--fit-method", choices=["gradient", "least-squares"],
                   default="gradient")
    t.add_argument("--survivors", type=int, default=None)
    t.add_argument("--max-layers", type=int, default=10)
    t.add_argument("--attempts", type=int, default=None,
                   help="roulette attempts (gmdh-roulette) or scan attempts (pairwise-dt)")
    t.add_argument("--learning-rate", type=float, default=None)
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--restarts", type=int, default=None)
    t.add_argument("--threshold", type=float, default=0.5)
    t.add_argument("--hidden", type=int, default=4)
    t.add_argument("--patience", type=int, default=100)
    t.add_argument("--c", type=float, default=1.0)
    t.add_argument("--no-ratchet", action="store_true")
    t.add_argument("--correction", choices=["fixed", "thermal"], default="fixed")
    t.add_argument("--pair-trainer", choices=["induce-dt", "sfs", "all-features"],
                   default="induce-dt")
    t.add_argument("--test-epochs", type=int, default=25)
    t.add_argument("--max-features", type=int, default=None)

    e = sub.add_parser("evaluate", help="apply a saved model to a CSV file")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", default=None, help="confusion matrix CSV")
    e.add_argument("--group-by", default=None,
                   help="column whose groups get per-group class distributions")

    x = sub.add_parser("export", help="render a saved model as text or DOT")
    x.add_argument("--model", required=True)
    x.add_argument("--format", required=True, choices=["text", "dot"])
    x.add_argument("--out", default=None)

    r = sub.add_parser("extract-rules",
                       help="distill a binary model into a threshold rule tree")
    r.add_argument("--model", required=True)
    r.add_argument("--data", required=True)
    r.add_argument("--out", required=True, help="rule-tree model file to write")
    return p


def _parse_fractions(text):
    fractions = []
    for part in text.split(":"):
        part = part.strip()
        try:
            if "/" in part:
                num, den = part.split("/")
                fractions.append(float(num) / float(den))
            else:
                fractions.append(float(part))
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"cannot parse split fraction '{part}'") from None
    if len(fractions) != 2:
        raise UsageError("--split needs exactly two fractions, e.g. 2/3:1/3")
    return tuple(fractions)


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_generate(args):
    n, seed = args.n, args.seed
    if args.kind == "xor":
        ds = gen_xor(n, seed)
    elif args.kind == "blobs":
        ds = gen_blobs(n, args.classes or 3, seed, spread=args.spread, radius=args.radius)
    else:
        ds, informative = gen_surrogate_eeg(n, args.relevant, args.irrelevant,
                                            args.classes or 2, seed,
                                            separation=args.separation)
        print("informative_columns=" + ",".join(str(c) for c in informative))
    save_csv(ds, args.out)
    print(f"wrote {ds.n_rows} rows x {ds.n_features} features to {args.out}")
    return 0


def _error_of(bundle, ds):
    return float(np.mean(bundle.predict_classes(ds.features) != ds.labels))


def cmd_train(args):
    ds = load_csv(args.data, args.label)
    fractions = _parse_fractions(args.split)
    parts = split(ds, SplitSpec(fractions, seed=args.seed, stratified=not args.no_stratify))
    tr_raw, va_raw = parts

    _, norm = normalize_zscore(tr_raw)
    tr = norm.apply_dataset(tr_raw)
    va = norm.apply_dataset(va_raw)
    full = norm.apply_dataset(ds)

    method = args.method
    seed = args.seed
    pair_lines = []

    def flag(value, default):
        return default if value is None else value

    if method == "ecnn":
        cfg = FitConfig(learning_rate=flag(args.learning_rate, 0.1),
                        epochs=flag(args.epochs, 200), restarts=flag(args.restarts, 5),
                        seed=seed, decision_threshold=args.threshold)
        model = train_ecnn(tr, va, cfg)
        config = {"learning_rate": cfg.learning_rate, "epochs": cfg.epochs,
                  "restarts": cfg.restarts, "threshold": cfg.decision_threshold}
    elif method in ("gmdh-layered", "gmdh-roulette"):
        cfg = GmdhConfig(kind=args.kind, survivors=args.survivors,
                         max_layers=args.max_layers, attempts=flag(args.attempts, 500),
                         method=args.fit_method.replace("-", "_"),
                         learning_rate=flag(args.learning_rate, 0.1),
                         epochs=flag(args.epochs, 200),
                         restarts=flag(args.restarts, 5), seed=seed)
        model = train_gmdh_layered(tr, va, cfg) if method == "gmdh-layered" \
            else train_gmdh_roulette(tr, va, cfg)
        config = {"kind": cfg.kind, "survivors": cfg.survivors,
                  "max_layers": cfg.max_layers, "attempts": cfg.attempts,
                  "fit_method": cfg.method, "learning_rate": cfg.learning_rate,
                  "epochs": cfg.epochs, "restarts": cfg.restarts}
    elif method == "lm":
        model, _ = train_pocket_ratchet(
            LinearMachine.zeros(ds.class_count, ds.n_features), tr,
            epochs=args.epochs, c=args.c, seed=seed,
            use_ratchet=not args.no_ratchet, correction=args.correction)
        config = {"epochs": args.epochs, "c": args.c,
                  "use_ratchet": not args.no_ratchet, "correction": args.correction}
    elif method == "pairwise-dt":
        cfg = LmdtConfig(c=args.c, use_ratchet=not args.no_ratchet,
                         test_epochs=args.test_epochs, correction=args.correction,
                         pair_trainer=args.pair_trainer,
                         max_features=args.max_features,
                         attempts=flag(args.attempts, 10), seed=seed)
        model = train_pairwise_tree(tr, va, ds.class_count, cfg)
        for (i, j) in sorted(model.tlus):
            t = model.tlus[(i, j)]
            pair_lines.append((i, j, 1.0 - t.accuracy, len(t.features)))
        config = {"c": cfg.c, "use_ratchet": cfg.use_ratchet,
                  "test_epochs": cfg.test_epochs, "correction": cfg.correction,
                  "pair_trainer": cfg.pair_trainer, "max_features": cfg.max_features,
                  "attempts": cfg.attempts}
    elif method == "fnn":
        cfg = FnnConfig(learning_rate=flag(args.learning_rate, 0.5),
                        max_epochs=flag(args.epochs, 2000), patience=args.patience,
                        restarts=flag(args.restarts, 10), seed=seed)
        model, _ = train_fnn(tr, va, args.hidden, cfg)
        config = {"hidden": args.hidden, "learning_rate": cfg.learning_rate,
                  "max_epochs": cfg.max_epochs, "patience": cfg.patience,
                  "restarts": cfg.restarts}
    else:  # ruletree fitted directly on the training rows
        if ds.class_count != 2:
            raise DataError("ruletree training requires binary labels")
        model = extract_rules(tr.features[tr.labels == 0], tr.features[tr.labels == 1],
                              range(ds.n_features), ds.feature_names)
        config = {}

    bundle = ModelBundle(method, model, norm, ds.feature_names, ds.label_names,
                         args.label, provenance={
                             "seed": seed, "config": config,
                             "split": list(fractions),
                             "stratified": not args.no_stratify,
                             "dataset_sha256": _sha256(args.data),
                             "rows": ds.n_rows,
                         })
    save_model(args.out, bundle)

    print(f"method={method}")
    print(f"rows={ds.n_rows} train_rows={tr.n_rows} val_rows={va.n_rows}")
    print(f"train_error={_error_of(bundle, tr)!r}")
    print(f"val_error={_error_of(bundle, va)!r}")
    print(f"data_error={_error_of(bundle, full)!r}")
    for i, j, err, nf in pair_lines:
        print(f"pair={i}/{j} error={err!r} features={nf}")
    if args.report and pair_lines:
        with open(args.report, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["class_i", "class_j", "error", "feature_count"])
            for i, j, err, nf in pair_lines:
                w.writerow([i, j, repr(err), nf])
    print(f"model={args.out}")
    return 0


def _load_for_model(path, bundle, group_by=None):
    """Read an evaluation CSV in the model's feature order.

    Columns must match the model's features exactly (plus the label column
    and, optionally, the group column); labels map through the stored
    label order.
    """
    p = Path(path)
    if not p.exists():
        raise DataError(f"missing file: {path}")
    with open(p, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file, no header row")
    header = [h.strip() for h in rows[0]]
    label_column = bundle.label_column
    if label_column not in header:
        raise DataError(f"{path}: label column '{label_column}' not found")
    if group_by is not None and group_by not in header:
        raise DataError(f"{path}: group column '{group_by}' not found")
    expected = set(bundle.feature_names)
    for h in header:
        if h not in expected and h != label_column and h != group_by:
            raise DataError(f"{path}: unexpected column '{h}' not known to the model")
    for name in bundle.feature_names:
        if name not in header:
            raise DataError(f"{path}: column '{name}' required by the model is missing")

    col_of = {h: i for i, h in enumerate(header)}
    label_index = {s: k for k, s in enumerate(bundle.label_names)}
    feats, labels, groups = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: line {lineno}: expected {len(header)} cells")
        vals = []
        for name in bundle.feature_names:
            cell = row[col_of[name]]
            try:
                value = float(cell)
                if not np.isfinite(value):
                    raise ValueError
            except ValueError:
                raise DataError(f"{path}: line {lineno}, column '{name}': "
                                f"non-numeric value '{cell.strip()}'") from None
            vals.append(value)
        feats.append(vals)
        lab = row[col_of[label_column]].strip()
        if lab not in label_index:
            raise DataError(f"{path}: line {lineno}: label '{lab}' not in the stored mapping")
        labels.append(label_index[lab])
        if group_by is not None:
            groups.append(row[col_of[group_by]].strip())
    if not feats:
        raise DataError(f"{path}: no data rows")
    ds = Dataset(np.array(feats), np.array(labels), bundle.feature_names,
                 len(bundle.label_names), bundle.label_names)
    return ds, groups


def cmd_evaluate(args):
    bundle = load_model(args.model)
    ds, groups = _load_for_model(args.data, bundle, args.group_by)
    X = bundle.norm.apply(ds.features)
    preds = np.asarray(bundle.predict_classes(X), dtype=int)
    r = len(bundle.label_names)
    error = float(np.mean(preds != ds.labels))
    confusion = np.zeros((r, r), dtype=int)
    for t, q in zip(ds.labels, preds):
        confusion[t, q] += 1

    print(f"rows={ds.n_rows}")
    print(f"error={error!r}")
    print("confusion (rows true, columns predicted):")
    for t in range(r):
        counts = " ".join(str(c) for c in confusion[t])
        print(f"  {bundle.label_names[t]}: {counts}")
    if args.group_by is not None:
        for g in sorted(set(groups)):
            mask = np.array([v == g for v in groups])
            dist = aggregate_segments(preds[mask], r)
            top = int(np.argmax(dist))
            text = ",".join(f"{p:.4f}" for p in dist)
            print(f"group={g} rows={int(mask.sum())} top={bundle.label_names[top]} "
                  f"p={dist[top]:.4f} dist={text}")
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["true\\pred"] + list(bundle.label_names))
            for t in range(r):
                w.writerow([bundle.label_names[t]] + [int(c) for c in confusion[t]])
    return 0


def cmd_export(args):
    bundle = load_model(args.model)
    model, method = bundle.model, bundle.method
    if args.format == "text":
        if method == "ecnn":
            out = describe_cascade(model)
        elif method in ("gmdh-layered", "gmdh-roulette"):
            out = to_polynomial_text(model)
        elif method == "lm":
            lines = []
            for k, w in enumerate(model.weights):
                terms = ", ".join([f"bias={w[0]:.4f}"] +
                                  [f"{bundle.feature_names[i]}={w[i + 1]:.4f}"
                                   for i in range(len(w) - 1)])
                lines.append(f"g_{bundle.label_names[k]}: {terms}")
            out = "\n".join(lines)
        elif method == "pairwise-dt":
            lines = []
            for (i, j) in sorted(model.tlus):
                t = model.tlus[(i, j)]
                feats = ", ".join(bundle.feature_names[f] for f in t.features)
                ws = ", ".join(f"{v:.4f}" for v in t.weights)
                lines.append(f"f_{bundle.label_names[i]}/{bundle.label_names[j]}: "
                             f"features [{feats}] weights [{ws}] "
                             f"accuracy {t.accuracy:.4f}")
            out = "\n".join(lines)
        elif method == "ruletree":
            out = to_text(model, bundle.label_names)
        else:  # fnn: plain weight dump, there is no compact closed form
            lines = [f"hidden[{k}]: " + " ".join(f"{v!r}" for v in row)
                     for k, row in enumerate(model.hidden_weights)]
            lines += [f"output[{k}]: " + " ".join(f"{v!r}" for v in row)
                      for k, row in enumerate(model.output_weights)]
            out = "\n".join(lines)
    else:
        if method == "ecnn":
            out = cascade_to_dot(model)
        elif method in ("gmdh-layered", "gmdh-roulette"):
            out = gmdh_to_dot(model)
        elif method == "ruletree":
            out = ruletree_to_dot(model, bundle.label_names)
        elif method == "lm":
            lines = ["digraph linmachine {", "  rankdir=LR;"]
            for i, name in enumerate(bundle.feature_names):
                lines.append(f'  "x{i}" [label="{name}", shape=box];')
            for k in range(model.class_count):
                lines.append(f'  "g{k}" [label="g_{bundle.label_names[k]}"];')
                for i in range(len(bundle.feature_names)):
                    lines.append(f'  "x{i}" -> "g{k}";')
            lines.append("}")
            out = "\n".join(lines)
        elif method == "pairwise-dt":
            lines = ["digraph pairwise {", "  rankdir=LR;"]
            for (i, j) in sorted(model.tlus):
                lines.append(f'  "f{i}_{j}" [label="f_{i}/{j}", shape=box];')
            for k in range(model.class_count):
                lines.append(f'  "g{k}" [label="g_{bundle.label_names[k]}"];')
            for (i, j) in sorted(model.tlus):
                lines.append(f'  "f{i}_{j}" -> "g{i}" [label="+1"];')
                lines.append(f'  "f{i}_{j}" -> "g{j}" [label="-1"];')
            lines.append("}")
            out = "\n".join(lines)
        else:
            raise UsageError(f"format 'dot' is not supported for method '{method}'")
    if args.out:
        Path(args.out).write_text(out + "\n", encoding="utf-8")
    else:
        print(out)
    return 0


def cmd_extract_rules(args):
    bundle = load_model(args.model)
    if len(bundle.label_names) != 2:
        raise DataError("rule extraction supports binary models only")
    if bundle.method == "ruletree":
        raise DataError("model is already a rule tree")
    ds, _ = _load_for_model(args.data, bundle)
    X = bundle.norm.apply(ds.features)
    preds = np.asarray(bundle.predict_classes(X), dtype=int)
    correct = preds == ds.labels

    if bundle.method == "ecnn":
        pool = list(bundle.model.selected_features)
    elif bundle.method in ("gmdh-layered", "gmdh-roulette"):
        pool = list(bundle.model.referenced_features())
    elif bundle.method == "pairwise-dt":
        pool = sorted({f for t in bundle.model.tlus.values() for f in t.features})
    else:
        pool = list(range(ds.n_features))

    X0 = X[correct & (ds.labels == 0)]
    X1 = X[correct & (ds.labels == 1)]
    if X0.shape[0] == 0 or X1.shape[0] == 0:
        raise TrainingError("one class has no correctly classified rows; "
                            "nothing to extract a rule from")
    tree = extract_rules(X0, X1, pool, ds.feature_names)

    out_bundle = ModelBundle("ruletree", tree, bundle.norm, bundle.feature_names,
                             bundle.label_names, bundle.label_column, provenance={
                                 "source_model": str(args.model),
                                 "source_method": bundle.method,
                                 "feature_pool": [int(v) for v in pool],
                                 "dataset_sha256": _sha256(args.data),
                             })
    save_model(args.out, out_bundle)
    tree_err = float(np.mean(tree.predict_classes(X) != ds.labels))
    print(to_text(tree, bundle.label_names))
    print(f"rule_error={tree_err!r} source_error={float(np.mean(~correct))!r}")
    print(f"model={args.out}")
    return 0


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        handler = {
            "generate": cmd_generate,
            "train": cmd_train,
            "evaluate": cmd_evaluate,
            "export": cmd_export,
            "extract-rules": cmd_extract_rules,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 3


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
