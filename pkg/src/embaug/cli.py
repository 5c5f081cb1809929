"""``embaug`` command-line entry point.

Every subcommand accepts ``--config FILE`` (a JSON object whose keys are the
subcommand's option names, e.g. ``{"runs": 30, "model": "lsvm"}``). Flags given
on the command line win over the file. The fully resolved settings are logged
and written next to the outputs as JSON, so ``--config`` on that file repeats
the run.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

logger = logging.getLogger("embaug")

LEXICON_FEATURES = {"bow": "bow", "liwc": "category", "category": "category",
                    "nhel": "emotion", "emotion": "emotion"}
NOT_CONFIGURABLE = {"command", "config", "func", "help"}


class UsageError(Exception):
    pass


def _feature_kind(name: str) -> str:
    """Lexicon/BOW names map to their kind; any other name labels an embedding."""
    return LEXICON_FEATURES.get(name.lower(), "embedding")


def _exponents(text: str) -> tuple[float, ...]:
    try:
        return tuple(2.0 ** float(e) for e in str(text).split(",") if str(e).strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad exponent list {text!r}") from exc


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _exists(*paths):
    for p in paths:
        if p is not None and not os.path.exists(p):
            raise UsageError(f"file not found: {p}")


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in NOT_CONFIGURABLE}


def _echo_config(args, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_resolved(args), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _config_beside(out_path) -> str:
    return str(out_path) + ".config.json"


# ------------------------------------------------------------------ options


def _mapper_opts(p):
    g = p.add_argument_group("mapper training")
    g.add_argument("--hidden", type=int, default=400, help="hidden units (default: 400)")
    g.add_argument("--epochs", type=int, default=200, help="max epochs (default: 200)")
    g.add_argument("--batch-size", type=int, default=128, help="mini-batch size (default: 128)")
    g.add_argument("--lr", type=float, default=0.01, help="initial SGD learning rate, halved on plateau (default: 0.01)")
    g.add_argument("--momentum", type=float, default=0.9, help="Nesterov momentum (default: 0.9)")
    g.add_argument("--val-fraction", type=float, default=0.1, help="held-out share for early stopping (default: 0.1)")
    g.add_argument("--patience", type=int, default=5, help="early-stop patience in epochs (default: 5)")
    g.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")
    g.add_argument("--linear", action="store_true", default=False, help="affine map instead of the ReLU MLP")


def _centroid_opts(p):
    g = p.add_argument_group("centroid targets")
    g.add_argument("--variant", type=int, choices=(1, 2), default=1, help="1: near only, 2: near minus far (default: 1)")
    g.add_argument("--k-near", type=int, default=10, help="nearest neighbours per centroid (default: 10)")
    g.add_argument("--k-far", type=int, default=10, help="most distant words per far centroid (default: 10)")
    g.add_argument("--far-weight", type=float, default=0.1, help="weight of the far term (default: 0.1)")


def _eval_opts(p, features=True):
    p.add_argument("--dataset", help="TSV of label<TAB>text, label 1 = depressive")
    if features:
        p.add_argument("--features", default="bow",
                       help="bow | liwc | nhel | any embedding name (needs --embedding) (default: bow)")
        p.add_argument("--embedding", help="word2vec text or binary embedding file")
        p.add_argument("--lexicon", help="category (.dic) or emotion (TSV) lexicon")
        p.add_argument("--bow-size", type=int, default=400, help="BOW vocabulary size (default: 400)")
    p.add_argument("--model", choices=("nb", "lr", "lsvm", "rsvm"), default="lsvm", help="(default: lsvm)")
    p.add_argument("--runs", type=int, default=30, help="repeated random splits (default: 30)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default: 0)")
    p.add_argument("--folds", type=int, default=10, help="CV folds for grid search (default: 10)")
    p.add_argument("--train-frac", type=float, default=0.7, help="train share of each split (default: 0.7)")
    p.add_argument("--no-scale", dest="scale", action="store_false", default=True,
                   help="disable train-fitted min-max scaling")
    p.add_argument("--c-exponents", default="-9,-7,-5,-3,-1,1,3,5", help="C grid as powers of 2")
    p.add_argument("--gamma-exponents", default="-11,-9,-7,-5,-3,-1,1,2", help="RBF gamma grid as powers of 2")
    p.add_argument("--workers", type=int, default=1, help="parallel processes; 1 keeps runs reproducible (default: 1)")
    p.add_argument("--out-dir", help="directory for report files")
    p.add_argument("--format", choices=("json", "table", "both"), default="both", help="(default: both)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embaug", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", help="JSON file of option values; flags override it")
        p.add_argument("--log-level", default="INFO", help="logging level (default: INFO)")
        p.set_defaults(func=func)
        return p

    p = add("train-embedding", cmd_train_embedding, "train a skip-gram negative-sampling embedding on a corpus")
    p.add_argument("--corpus", help="one post per line; split into sentences on . ? !")
    p.add_argument("--out", help="output embedding (.vec text, .bin sidecar)")
    p.add_argument("--dim", type=int, default=400, help="(default: 400)")
    p.add_argument("--window", type=int, default=5, help="max context offset (default: 5)")
    p.add_argument("--mincount", type=int, default=10, help="(default: 10)")
    p.add_argument("--negatives", type=int, default=5, help="(default: 5)")
    p.add_argument("--epochs", type=int, default=5, help="(default: 5)")
    p.add_argument("--lr", type=float, default=0.025, help="initial learning rate, decays linearly (default: 0.025)")
    p.add_argument("--subsample", type=float, default=0.0, help="frequent-word subsampling threshold, 0 = off")
    p.add_argument("--seed", type=int, default=1, help="(default: 1)")
    p.add_argument("--workers", type=int, default=1, help="threads; >1 is not deterministic (default: 1)")

    p = add("map", cmd_map, "fit the general-to-domain mapper on shared words")
    p.add_argument("--source", help="general embedding (TE)")
    p.add_argument("--target", help="domain embedding (DE)")
    p.add_argument("--out", help="mapper checkpoint (.npz container)")
    _mapper_opts(p)

    p = add("map-centroid", cmd_map_centroid, "fit the mapper toward domain neighbourhood centroids")
    p.add_argument("--source")
    p.add_argument("--target")
    p.add_argument("--out", help="mapper checkpoint")
    _mapper_opts(p)
    _centroid_opts(p)

    p = add("aaeme", cmd_aaeme, "train an averaged autoencoded meta-embedding and write it")
    p.add_argument("--source1", help="first source (e.g. TE)")
    p.add_argument("--source2", help="second source (DE, or ATE for the OOV variant)")
    p.add_argument("--out", help="output meta-embedding")
    p.add_argument("--checkpoint", help="optional model checkpoint path")
    p.add_argument("--meta-dim", type=int, default=None, help="(default: first source dim)")
    p.add_argument("--activation", choices=("linear", "tanh"), default="linear", help="encoder activation")
    p.add_argument("--no-normalize", dest="normalize", action="store_false", default=True,
                   help="skip per-word L2 normalization of inputs")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)

    p = add("build-ate", cmd_build_ate, "apply a mapper to every general-embedding word")
    p.add_argument("--source", help="general embedding (TE)")
    p.add_argument("--mapper", help="mapper checkpoint")
    p.add_argument("--out", help="output embedding")
    p.add_argument("--target", help="domain embedding, only needed with --copy-common")
    p.add_argument("--copy-common", action="store_true", default=False,
                   help="shared words take their domain vector instead of the mapped one")

    p = add("ablate-partial", cmd_ablate_partial, "adjust only the words shared with the domain embedding")
    p.add_argument("--source")
    p.add_argument("--target")
    p.add_argument("--mapper")
    p.add_argument("--out")

    p = add("featurize", cmd_featurize, "turn a dataset into a feature matrix (.npz with X, y)")
    p.add_argument("--dataset")
    p.add_argument("--features", default="bow", help="bow | liwc | nhel | pad | embedding name")
    p.add_argument("--embedding")
    p.add_argument("--lexicon")
    p.add_argument("--bow-size", type=int, default=400)
    p.add_argument("--max-len", type=int, default=None, help="pad length (default: longest tweet)")
    p.add_argument("--scale", action="store_true", default=False, help="min-max scale over the given rows")
    p.add_argument("--out")

    p = add("evaluate", cmd_evaluate, "repeated split / grid-search / test evaluation")
    _eval_opts(p)

    p = add("ablation-suite", cmd_ablation_suite, "compare TE, DE, ATE and derived embeddings under shared splits")
    _eval_opts(p, features=False)
    p.add_argument("--te", help="general embedding")
    p.add_argument("--de", help="domain embedding")
    p.add_argument("--spaces", default="TE,DE,ATE,TE∩DE-in-TE-adjusted",
                   help="comma list from: TE, DE, ATE, TE∩DE-in-TE-adjusted, ATE-Centroid-1, "
                        "ATE-Centroid-2, ATE-AAEME, ATE-AAEME-OOV")
    p.add_argument("--hidden", type=int, default=400)
    p.add_argument("--map-epochs", type=int, default=200)
    p.add_argument("--map-lr", type=float, default=0.01)
    _centroid_opts(p)

    p = add("profile-dataset", cmd_profile, "mean category percentages per class (LIWC-style profile)")
    p.add_argument("--dataset")
    p.add_argument("--lexicon", help="category lexicon (.dic)")
    p.add_argument("--out", help="write the table here instead of stdout")

    p = add("pca-export", cmd_pca_export, "2-D PCA coordinates of named word lists")
    p.add_argument("--embedding")
    p.add_argument("--list", dest="lists", action="append", default=None, metavar="NAME=FILE",
                   help="word list (one per line); repeatable")
    p.add_argument("--dataset", help="optional: keep only words frequent in this dataset")
    p.add_argument("--min-count", type=int, default=1, help="frequency threshold with --dataset (default: 1)")
    p.add_argument("--out")
    return parser


def _parse(parser, argv):
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        _exists(args.config)
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions} - NOT_CONFIGURABLE
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config key(s) for {args.command}: {', '.join(unknown)}")
        subparser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


# ------------------------------------------------------------------ commands


def cmd_train_embedding(args):
    from embaug.embedding import save_embedding
    from embaug.sgns import SgnsConfig, train_sgns
    from embaug.text import read_corpus

    _require(args, "corpus", "out")
    _exists(args.corpus)
    cfg = SgnsConfig(dim=args.dim, window=args.window, mincount=args.mincount, negatives=args.negatives,
                     epochs=args.epochs, learning_rate=args.lr, subsample=args.subsample, seed=args.seed,
                     workers=args.workers)
    emb = train_sgns(read_corpus(args.corpus), cfg)
    save_embedding(emb, args.out)
    _echo_config(args, _config_beside(args.out))
    logger.info("wrote %s (%d words, dim %d)", args.out, len(emb), emb.dim)


def _mapper_cfg(args):
    from embaug.mapper import MapperTrainConfig

    return MapperTrainConfig(hidden_units=args.hidden, epochs=args.epochs, batch_size=args.batch_size,
                             learning_rate=args.lr, momentum=args.momentum,
                             validation_fraction=args.val_fraction, patience=args.patience,
                             seed=args.seed, linear=args.linear)


def cmd_map(args):
    from embaug.embedding import load_embedding
    from embaug.mapper import save_mapper, train_mapper

    _require(args, "source", "target", "out")
    _exists(args.source, args.target)
    cfg = _mapper_cfg(args)
    m = train_mapper(load_embedding(args.source), load_embedding(args.target), cfg)
    save_mapper(m, args.out)
    _echo_config(args, _config_beside(args.out))
    logger.info("wrote mapper %s", args.out)


def cmd_map_centroid(args):
    from embaug.embedding import load_embedding
    from embaug.mapper import CentroidConfig, save_mapper, train_centroid_mapper

    _require(args, "source", "target", "out")
    _exists(args.source, args.target)
    cfg = _mapper_cfg(args)
    ccfg = CentroidConfig(k_near=args.k_near, k_far=args.k_far, far_weight=args.far_weight, variant=args.variant)
    m = train_centroid_mapper(load_embedding(args.source), load_embedding(args.target), cfg, ccfg)
    save_mapper(m, args.out)
    _echo_config(args, _config_beside(args.out))


def cmd_aaeme(args):
    from embaug.aaeme import AaemeConfig, build_meta_embedding, save_aaeme, train_aaeme
    from embaug.embedding import load_embedding, save_embedding

    _require(args, "source1", "source2", "out")
    _exists(args.source1, args.source2)
    s1, s2 = load_embedding(args.source1), load_embedding(args.source2)
    cfg = AaemeConfig(meta_dim=args.meta_dim, activation=args.activation, normalize=args.normalize,
                      epochs=args.epochs, batch_size=args.batch_size, learning_rate=args.lr,
                      momentum=args.momentum, validation_fraction=args.val_fraction,
                      patience=args.patience, seed=args.seed)
    model = train_aaeme(s1, s2, cfg)
    if args.checkpoint:
        save_aaeme(model, args.checkpoint)
    save_embedding(build_meta_embedding(model, s1, s2), args.out)
    _echo_config(args, _config_beside(args.out))


def cmd_build_ate(args):
    from embaug.embedding import load_embedding, save_embedding
    from embaug.mapper import build_ate, load_mapper

    _require(args, "source", "mapper", "out")
    if args.copy_common:
        _require(args, "target")
    _exists(args.source, args.mapper, args.target)
    de = load_embedding(args.target) if args.target else None
    ate = build_ate(load_embedding(args.source), load_mapper(args.mapper), de, args.copy_common)
    save_embedding(ate, args.out)
    _echo_config(args, _config_beside(args.out))
    logger.info("wrote %s (%d words)", args.out, len(ate))


def cmd_ablate_partial(args):
    from embaug.embedding import load_embedding, save_embedding
    from embaug.mapper import build_partial_adjusted, load_mapper

    _require(args, "source", "target", "mapper", "out")
    _exists(args.source, args.target, args.mapper)
    out = build_partial_adjusted(load_embedding(args.source), load_embedding(args.target),
                                 load_mapper(args.mapper))
    save_embedding(out, args.out)
    _echo_config(args, _config_beside(args.out))


def _feature_spec(args):
    from embaug import features as F
    from embaug.embedding import load_embedding
    from embaug.evaluation import FeatureSpec

    kind = _feature_kind(args.features)
    if kind == "embedding":
        _require(args, "embedding")
        _exists(args.embedding)
        return FeatureSpec("embedding", embedding=load_embedding(args.embedding), bow_size=args.bow_size)
    if kind == "category":
        _require(args, "lexicon")
        _exists(args.lexicon)
        return FeatureSpec("category", category_lexicon=F.load_category_lexicon(args.lexicon))
    if kind == "emotion":
        _require(args, "lexicon")
        _exists(args.lexicon)
        return FeatureSpec("emotion", emotion_lexicon=F.load_emotion_lexicon(args.lexicon))
    return FeatureSpec("bow", bow_size=args.bow_size)


def _check_eval_args(args, kind: str):
    _require(args, "dataset", "out_dir")
    if args.model == "nb" and not args.scale and kind == "embedding":
        raise UsageError("--model nb needs non-negative features: drop --no-scale or use bow/liwc/nhel")
    if args.runs < 1 or args.folds < 2:
        raise UsageError("--runs must be >= 1 and --folds >= 2")
    _exists(args.dataset)


def _grid(args):
    from embaug.classifiers import ParamGrid

    return ParamGrid(C=_exponents(args.c_exponents), gamma=_exponents(args.gamma_exponents))


def _write_reports(args, stem: str, json_text: str, table_text: str):
    os.makedirs(args.out_dir, exist_ok=True)
    if args.format in ("json", "both"):
        with open(os.path.join(args.out_dir, f"{stem}.json"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json_text)
    if args.format in ("table", "both"):
        with open(os.path.join(args.out_dir, f"{stem}.txt"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(table_text)
    _echo_config(args, os.path.join(args.out_dir, "resolved_config.json"))
    sys.stdout.write(table_text)


def cmd_evaluate(args):
    from embaug.evaluation import ExperimentSpec, repeat_experiments
    from embaug.features import load_dataset

    kind = _feature_kind(args.features)
    _check_eval_args(args, kind)
    spec = ExperimentSpec(load_dataset(args.dataset), _feature_spec(args), model=args.model, grid=_grid(args),
                          runs=args.runs, seed=args.seed, folds=args.folds, train_frac=args.train_frac,
                          scale=args.scale, workers=args.workers)
    rep = repeat_experiments(spec, name=f"{args.model.upper()}-{args.features}")
    _write_reports(args, "report", rep.to_json(), rep.to_table())


def cmd_ablation_suite(args):
    from embaug.embedding import load_embedding
    from embaug.evaluation import ABLATION_SPACES, ExperimentSpec, FeatureSpec, ablation_suite
    from embaug.features import load_dataset
    from embaug.mapper import CentroidConfig, MapperTrainConfig

    _check_eval_args(args, "embedding")
    _require(args, "te", "de")
    _exists(args.te, args.de)
    spaces = [s.strip() for s in args.spaces.split(",") if s.strip()]
    bad = [s for s in spaces if s not in ABLATION_SPACES]
    if bad:
        raise UsageError(f"unknown --spaces entries: {bad}")
    te, de = load_embedding(args.te), load_embedding(args.de)
    spec = ExperimentSpec(load_dataset(args.dataset), FeatureSpec("embedding", embedding=te), model=args.model,
                          grid=_grid(args), runs=args.runs, seed=args.seed, folds=args.folds,
                          train_frac=args.train_frac, scale=args.scale, workers=args.workers)
    mcfg = MapperTrainConfig(hidden_units=args.hidden, epochs=args.map_epochs, learning_rate=args.map_lr,
                             seed=args.seed)
    ccfg = CentroidConfig(k_near=args.k_near, k_far=args.k_far, far_weight=args.far_weight)
    res = ablation_suite(spec, te, de, mcfg, ccfg, spaces=spaces)
    payload = json.dumps({k: r.to_dict() for k, r in res.reports.items()}, indent=2, sort_keys=True,
                         ensure_ascii=False) + "\n"
    _write_reports(args, "ablation", payload, res.table())


def cmd_featurize(args):
    from embaug import features as F
    from embaug.evaluation import _Featurizer, _tokens
    from embaug.text import tokenize_tweet

    _require(args, "dataset", "out")
    _exists(args.dataset)
    ds = F.load_dataset(args.dataset)
    if args.features == "pad":
        from embaug.embedding import load_embedding

        _require(args, "embedding")
        _exists(args.embedding)
        emb = load_embedding(args.embedding)
        docs = [tokenize_tweet(t) for t in ds.texts]
        max_len = args.max_len or max(1, max(len(d) for d in docs))
        X = np.array([F.pad_concat(d, emb, max_len) for d in docs])
        extra = {"max_len": np.int64(max_len)}
    else:
        spec = _feature_spec(args)
        docs = _tokens(ds.texts, spec.kind)
        feat = _Featurizer(spec).fit(docs)
        X, _ = feat.transform(docs)
        extra = {"terms": np.array(feat.bow.terms)} if feat.bow else {}
    if args.scale:
        X = F.fit_minmax(X).transform(X)
    with open(args.out, "wb") as fh:
        np.savez(fh, X=X, y=ds.labels, **extra)
    _echo_config(args, _config_beside(args.out))
    logger.info("wrote %s with X of shape %s", args.out, X.shape)


def cmd_profile(args):
    from embaug import features as F
    from embaug.text import tokenize_tweet

    _require(args, "dataset", "lexicon")
    _exists(args.dataset, args.lexicon)
    ds = F.load_dataset(args.dataset)
    lex = F.load_category_lexicon(args.lexicon)
    docs = [tokenize_tweet(t) for t in ds.texts]
    cols = {}
    for label in (1, 0):
        sub = [d for d, y in zip(docs, ds.labels) if y == label]
        if sub:
            cols[label] = F.dataset_category_profile(sub, lex)
    head = ["Category"] + [f"label={k} (n={int(np.sum(ds.labels == k))})" for k in cols]
    rows = [[name] + [f"{cols[k][name]:.2f}" for k in cols] for name in lex.names]
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    text = "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in [head] + rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        _echo_config(args, _config_beside(args.out))
    sys.stdout.write(text)


def cmd_pca_export(args):
    from embaug.analysis import frequent_words, project_wordlists, write_projection
    from embaug.embedding import load_embedding
    from embaug.features import load_dataset
    from embaug.text import load_wordlist, tokenize_tweet

    _require(args, "embedding", "lists", "out")
    lists = {}
    for item in args.lists:
        name, sep, path = item.partition("=")
        if not sep:
            raise UsageError(f"--list expects NAME=FILE, got {item!r}")
        _exists(path)
        lists[name] = load_wordlist(path)
    _exists(args.embedding, args.dataset)
    if args.dataset:
        keep = frequent_words([tokenize_tweet(t) for t in load_dataset(args.dataset).texts], args.min_count)
        lists = {k: [w for w in v if w in keep] for k, v in lists.items()}
    res = project_wordlists(load_embedding(args.embedding), lists)
    write_projection(res, args.out)
    _echo_config(args, _config_beside(args.out))
    logger.info("wrote %d points to %s (silhouette %s)", len(res.records), args.out, res.silhouette)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _parse(parser, argv)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        logger.info("resolved config: %s", json.dumps(_resolved(args), sort_keys=True, ensure_ascii=False))
        args.func(args)
    except UsageError as exc:
        print(f"embaug: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"embaug: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
