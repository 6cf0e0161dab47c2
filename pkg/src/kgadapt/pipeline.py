"""Pipeline stages over a fixed workdir layout.

Each stage reads the previous stage's documented artifacts, writes its own
into ``workdir/<stage>/`` and records a manifest (input hashes, config
hash, timestamp). Primary outputs are byte-identical across re-runs with
the same config and seed; manifests are metadata, not primary outputs.
"""

from __future__ import annotations

import copy
import hashlib
import json
import time
from pathlib import Path

import numpy as np
import torch

from . import nn as knn
from .clustering import (KMeans, apply_labels, cluster_representatives,
                         load_label_file, save_representatives_tsv)
from .config import PipelineConfig
from .corpus import Corpus, Sentence, load_corpus, sample_subset, tokenize
from .experiment import run_grid, speed_benchmark
from .kg import build_kg, export_training_set, load_kg, save_kg
from .matching import PhraseMatcher, load_annotations, save_annotations
from .metrics import auc, f1_score
from .model import (KnowledgeAdapterModel, TrainConfig, collate,
                    encode_input, encode_pair, finetune, predict,
                    pretrain_adapter)
from .phrases import PhraseMiner, load_lexicon_tsv, save_lexicon_tsv
from .relation import RelationClassifier, annotate_corpus
from .student import (DistillExample, DistillTrainConfig, StudentConfig,
                      TextCNN, collate_tokens, pseudo_label, student_predict,
                      train_student)
from .synth import SynthSpec, generate_synthetic_domain
from .vectorize import TfidfVectorizer
from .vocab import Vocabulary


class MissingArtifactError(ValueError):
    """An upstream stage has not produced a required artifact."""

    def __init__(self, path: Path, stage: str):
        super().__init__(
            f"missing artifact {path}; run the '{stage}' stage first")
        self.stage = stage


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(path, stage)
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(stage_dir: Path, stage: str, cfg: PipelineConfig,
                    inputs: list[Path]) -> None:
    manifest = {
        "stage": stage,
        "config_hash": cfg.config_hash(),
        "inputs": {str(p): _sha256(p) for p in inputs if p.is_file()},
        "timestamp": time.time(),
    }
    (stage_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True))


def _stage_dir(cfg: PipelineConfig, stage: str) -> Path:
    d = Path(cfg.workdir) / stage
    d.mkdir(parents=True, exist_ok=True)
    return d


def _json_dump(data, path: Path) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# dataset files

def save_classification_tsv(examples, path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        fh.write("text\tlabel\n")
        for tokens, label in examples:
            fh.write(f"{' '.join(tokens)}\t{label}\n")


def load_classification_tsv(path: Path) -> list[tuple[tuple[str, ...], str]]:
    examples = []
    with path.open(encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            text, label = line.rstrip("\n").split("\t")
            examples.append((tuple(tokenize(text)), label))
    return examples


def save_matching_tsv(examples, path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        fh.write("q1\tq2\ts\n")
        for q1, q2, s in examples:
            fh.write(f"{' '.join(q1)}\t{' '.join(q2)}\t{s}\n")


def load_matching_tsv(path: Path):
    examples = []
    with path.open(encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            q1, q2, s = line.rstrip("\n").split("\t")
            examples.append((tuple(tokenize(q1)), tuple(tokenize(q2)), int(s)))
    return examples


# ---------------------------------------------------------------------------
# shared loaders

def _corpus_path(cfg: PipelineConfig) -> Path:
    if cfg.corpus_path:
        return Path(cfg.corpus_path)
    path = Path(cfg.workdir) / "synth" / "corpus.txt"
    return _require(path, "synth")


def _load_pipeline_corpus(cfg: PipelineConfig) -> Corpus:
    path = _corpus_path(cfg)
    fmt = cfg.corpus_format if cfg.corpus_path else "plain-lines"
    return load_corpus(path, format=fmt)


def _task_path(cfg: PipelineConfig, key: str, synth_name: str) -> Path:
    configured = getattr(cfg.tasks, key)
    if configured:
        return Path(configured)
    return _require(Path(cfg.workdir) / "synth" / synth_name, "synth")


def _load_lexicon(cfg: PipelineConfig):
    path = _require(Path(cfg.workdir) / "mine" / "phrases.tsv", "mine")
    return load_lexicon_tsv(
        path, min_frequency=cfg.phrases.min_frequency,
        min_quality=cfg.phrases.min_quality, max_len=cfg.phrases.max_len), path


def _build_vocab(cfg: PipelineConfig) -> Vocabulary:
    """Deterministic vocabulary over the corpus and task training texts."""
    sources = [s.tokens for s in _load_pipeline_corpus(cfg)]
    for key, synth_name in (("classification_train", "class_train.tsv"),):
        try:
            path = _task_path(cfg, key, synth_name)
        except MissingArtifactError:
            continue
        sources += [tokens for tokens, _ in load_classification_tsv(path)]
    return Vocabulary.build(sources)


# ---------------------------------------------------------------------------
# stages

def stage_synth(cfg: PipelineConfig) -> Path:
    out = _stage_dir(cfg, "synth")
    spec = SynthSpec(**cfg.synth.__dict__)
    domain = generate_synthetic_domain(cfg.seed, spec)
    (out / "corpus.txt").write_text(
        "".join(s.raw + "\n" for s in domain.corpus), encoding="utf-8")
    save_classification_tsv(domain.classification.train, out / "class_train.tsv")
    save_classification_tsv(domain.classification.test, out / "class_test.tsv")
    save_matching_tsv(domain.matching.train, out / "match_train.tsv")
    save_matching_tsv(domain.matching.test, out / "match_test.tsv")
    (out / "unlabeled.txt").write_text(
        "".join(" ".join(t) + "\n" for t in domain.unlabeled), encoding="utf-8")
    _json_dump({
        "relations": domain.relations,
        "classes": domain.classification.classes,
        "planted_phrases": [" ".join(p) for p in domain.planted_phrases],
        "golden_relations": {str(k): v
                             for k, v in domain.golden_relations.items()},
        "facts": [{"relation": f.relation, "entities": list(f.entities),
                   "sentence_ids": f.sentence_ids}
                  for f in domain.golden_facts],
    }, out / "golden.json")
    _write_manifest(out, "synth", cfg, [])
    return out


def stage_mine(cfg: PipelineConfig) -> Path:
    out = _stage_dir(cfg, "mine")
    corpus_file = _corpus_path(cfg)
    corpus = _load_pipeline_corpus(cfg)
    miner = PhraseMiner(
        min_frequency=cfg.phrases.min_frequency,
        min_quality=cfg.phrases.min_quality,
        max_len=cfg.phrases.max_len).fit(corpus)
    save_lexicon_tsv(miner.lexicon_, out / "phrases.tsv")
    _write_manifest(out, "mine", cfg, [corpus_file])
    return out


def stage_cluster(cfg: PipelineConfig) -> Path:
    out = _stage_dir(cfg, "cluster")
    corpus_file = _corpus_path(cfg)
    corpus = _load_pipeline_corpus(cfg)
    sample = sample_subset(
        corpus, min(cfg.clustering.sample_size, len(corpus)), cfg.seed)
    tfidf = TfidfVectorizer().fit(sample)
    X = tfidf.transform(sample)
    km = KMeans(n_clusters=cfg.clustering.k, seed=cfg.seed).fit(X)
    report = cluster_representatives(km, sample, X, top_n=cfg.clustering.top_n)
    save_representatives_tsv(report, out / "representatives.tsv")
    _json_dump({
        "k": cfg.clustering.k,
        "sample_ids": [s.id for s in sample],
        "assignments": [int(c) for c in km.labels_],
    }, out / "state.json")
    _write_manifest(out, "cluster", cfg, [corpus_file])
    return out


def stage_label_apply(cfg: PipelineConfig, labels_path: str | Path) -> Path:
    out = _stage_dir(cfg, "labeled")
    state_file = _require(Path(cfg.workdir) / "cluster" / "state.json",
                          "cluster")
    labels_file = Path(labels_path)
    if not labels_file.exists():
        raise MissingArtifactError(labels_file, "cluster (then name clusters)")
    state = json.loads(state_file.read_text())
    corpus = _load_pipeline_corpus(cfg)
    sample = Corpus(
        sentences=[corpus.sentences[i] for i in state["sample_ids"]],
        source_path=corpus.source_path)
    label_map = load_label_file(labels_file, n_clusters=state["k"])
    labeled, relations = apply_labels(state["assignments"], label_map, sample)
    with (out / "labeled.jsonl").open("w", encoding="utf-8") as fh:
        for sentence, relation in labeled:
            fh.write(json.dumps({
                "id": sentence.id, "tokens": list(sentence.tokens),
                "relation": relation}, ensure_ascii=False, sort_keys=True)
                + "\n")
    _json_dump({"relations": relations}, out / "relations.json")
    _write_manifest(out, "label-apply", cfg, [state_file, labels_file])
    return out


def stage_annotate(cfg: PipelineConfig) -> Path:
    out = _stage_dir(cfg, "annotate")
    lexicon, lexicon_file = _load_lexicon(cfg)
    labeled_file = _require(
        Path(cfg.workdir) / "labeled" / "labeled.jsonl", "label-apply")
    records = [json.loads(line)
               for line in labeled_file.read_text().splitlines()]
    docs = [r["tokens"] for r in records]
    labels = [r["relation"] for r in records]
    classifier = RelationClassifier(
        epochs=cfg.classifier.epochs, lr=cfg.classifier.lr,
        l2=cfg.classifier.l2, seed=cfg.seed).fit(docs, labels)
    matcher = PhraseMatcher(lexicon)
    corpus = _load_pipeline_corpus(cfg)
    annotated = annotate_corpus(
        classifier, matcher, corpus,
        confidence_floor=cfg.classifier.confidence_floor)
    save_annotations(annotated, out / "annotated.jsonl")
    _write_manifest(out, "annotate", cfg, [lexicon_file, labeled_file])
    return out


def stage_build_kg(cfg: PipelineConfig) -> Path:
    out = _stage_dir(cfg, "kg")
    annotated_file = _require(
        Path(cfg.workdir) / "annotate" / "annotated.jsonl", "annotate")
    annotated = load_annotations(annotated_file)
    # content hashes, so identical inputs give identical output bytes
    # regardless of where the workdir lives
    provenance = (f"corpus:{_sha256(_corpus_path(cfg))[:16]} "
                  f"annotations:{_sha256(annotated_file)[:16]}")
    kg = build_kg(annotated, provenance=provenance)
    save_kg(kg, out / "kg.jsonl")
    _write_manifest(out, "build-kg", cfg, [annotated_file])
    return out


def _model_checkpoint_config(cfg: PipelineConfig, vocab_size: int,
                             n_classes: int, component: str) -> dict:
    return {
        "model": cfg.model.to_model_config().to_dict(),
        "vocab_size": vocab_size,
        "n_classes": n_classes,
        "component": component,
    }


def stage_pretrain_adapter(cfg: PipelineConfig) -> Path:
    out = _stage_dir(cfg, "adapter")
    kg_file = _require(Path(cfg.workdir) / "kg" / "kg.jsonl", "build-kg")
    annotated_file = _require(
        Path(cfg.workdir) / "annotate" / "annotated.jsonl", "annotate")
    kg = load_kg(kg_file)
    annotated_by_id = {a.sentence.id: a for a in load_annotations(annotated_file)}
    examples = export_training_set(kg, annotated_by_id, mode=cfg.export_mode)
    vocab = _build_vocab(cfg)
    relations = sorted(kg.relations)
    model = KnowledgeAdapterModel(
        cfg.model.to_model_config(), len(vocab), seed=cfg.seed)
    history = pretrain_adapter(
        model, examples, vocab, relations,
        TrainConfig(epochs=cfg.pretrain.epochs, lr=cfg.pretrain.lr,
                    batch_size=cfg.pretrain.batch_size, seed=cfg.seed))
    knn.save_checkpoint(
        model,
        _model_checkpoint_config(cfg, len(vocab), len(relations), "pretrained"),
        out / "checkpoint")
    _json_dump(vocab.to_list(), out / "vocab.json")
    _json_dump({"relations": relations}, out / "relations.json")
    _json_dump(history, out / "history.json")
    _write_manifest(out, "pretrain-adapter", cfg, [kg_file, annotated_file])
    return out


def _load_teacher_sources(cfg: PipelineConfig):
    """Lexicon matcher + vocab for model input encoding."""
    lexicon, _ = _load_lexicon(cfg)
    return PhraseMatcher(lexicon)


def _classification_metric(model, examples, classes, matcher, vocab, max_len):
    encoded = []
    for tokens, _ in examples:
        sent = Sentence(id=-1, raw=" ".join(tokens), tokens=tuple(tokens))
        starts = [m.start for m in matcher.find_mentions(sent)]
        encoded.append(encode_input(tokens, starts, vocab, max_len))
    pred_idx, probs = predict(model, encoded)
    preds = [classes[i] for i in pred_idx]
    golds = [label for _, label in examples]
    return f1_score(preds, golds, classes)["macro"], probs


def _matching_metric(model, examples, matcher, vocab, max_len):
    encoded = []
    for q1, q2, _ in examples:
        s1 = Sentence(id=-1, raw="", tokens=tuple(q1))
        s2 = Sentence(id=-1, raw="", tokens=tuple(q2))
        starts1 = [m.start for m in matcher.find_mentions(s1)]
        starts2 = [m.start for m in matcher.find_mentions(s2)]
        encoded.append(encode_pair(q1, starts1, q2, starts2, vocab, max_len))
    _, probs = predict(model, encoded)
    scores = probs[:, 1].numpy()
    return auc(scores, [s for _, _, s in examples]), probs


def stage_finetune(cfg: PipelineConfig) -> Path:
    out = _stage_dir(cfg, "finetune")
    matcher = _load_teacher_sources(cfg)
    task = cfg.finetune.task
    inputs = []

    adapter_dir = Path(cfg.workdir) / "adapter"
    model_cfg = cfg.model.to_model_config()
    if model_cfg.use_adapter:
        checkpoint = _require(adapter_dir / "checkpoint" / "manifest.json",
                              "pretrain-adapter").parent
        vocab = Vocabulary.from_list(
            json.loads((adapter_dir / "vocab.json").read_text()))
        n_relations = len(json.loads(
            (adapter_dir / "relations.json").read_text())["relations"])
        inputs.append(checkpoint / "manifest.json")
    else:
        checkpoint = None
        vocab = _build_vocab(cfg)
        n_relations = None

    if task == "classification":
        train_file = _task_path(cfg, "classification_train", "class_train.tsv")
        test_file = _task_path(cfg, "classification_test", "class_test.tsv")
        train = load_classification_tsv(train_file)
        test = load_classification_tsv(test_file)
        classes = sorted({label for _, label in train + test})
    else:
        train_file = _task_path(cfg, "matching_train", "match_train.tsv")
        test_file = _task_path(cfg, "matching_test", "match_test.tsv")
        train = load_matching_tsv(train_file)
        test = load_matching_tsv(test_file)
        classes = ["0", "1"]
    inputs += [train_file, test_file]

    best_state = {}

    def run_cell(seed: int, lr: float) -> dict:
        if checkpoint is not None:
            model = KnowledgeAdapterModel(model_cfg, len(vocab), seed=cfg.seed)
            model.new_head(n_relations, seed=cfg.seed)
            knn.load_checkpoint(
                model,
                _model_checkpoint_config(cfg, len(vocab), n_relations,
                                         "pretrained"),
                checkpoint)
        else:
            model = KnowledgeAdapterModel(model_cfg, len(vocab), seed=seed)
        train_cfg = TrainConfig(epochs=cfg.finetune.epochs, lr=lr,
                                batch_size=cfg.finetune.batch_size, seed=seed)
        finetune(model, train, task,
                 classes if task == "classification" else ["0", "1"],
                 matcher, vocab, train_cfg)
        if task == "classification":
            metric, _ = _classification_metric(
                model, test, classes, matcher, vocab, model_cfg.max_len)
        else:
            metric, _ = _matching_metric(
                model, test, matcher, vocab, model_cfg.max_len)
        best_state[(seed, lr)] = copy.deepcopy(model.state_dict())
        return {"metric": metric}

    grid = run_grid(run_cell, cfg.finetune.seeds, cfg.finetune.learning_rates)
    best = grid.best_run
    model = KnowledgeAdapterModel(model_cfg, len(vocab),
                                  seed=cfg.seed if checkpoint else best["seed"])
    model.new_head(len(classes) if task == "classification" else 2,
                   seed=best["seed"])
    model.load_state_dict(best_state[(best["seed"], best["lr"])])
    n_classes = len(classes) if task == "classification" else 2
    knn.save_checkpoint(
        model, _model_checkpoint_config(cfg, len(vocab), n_classes, "finetuned"),
        out / "best")
    _json_dump({
        "task": task,
        "classes": classes,
        "use_adapter": model_cfg.use_adapter,
        "vocab": vocab.to_list(),
    }, out / "meta.json")
    _json_dump(grid.to_dict(), out / "report.json")
    _write_manifest(out, "finetune", cfg, inputs)
    return out


def load_teacher(cfg: PipelineConfig):
    """(model, vocab, classes, matcher) from the best fine-tuned checkpoint."""
    finetune_dir = Path(cfg.workdir) / "finetune"
    meta_file = _require(finetune_dir / "meta.json", "finetune")
    meta = json.loads(meta_file.read_text())
    vocab = Vocabulary.from_list(meta["vocab"])
    model_cfg = cfg.model.to_model_config()
    n_classes = len(meta["classes"]) if meta["task"] == "classification" else 2
    model = KnowledgeAdapterModel(model_cfg, len(vocab), seed=cfg.seed)
    model.new_head(n_classes, seed=cfg.seed)
    knn.load_checkpoint(
        model, _model_checkpoint_config(cfg, len(vocab), n_classes, "finetuned"),
        finetune_dir / "best")
    matcher = _load_teacher_sources(cfg)
    return model, vocab, meta["classes"], matcher


def teacher_predict_fn(model, vocab, classes, matcher, max_len):
    """Vectorized token-sequences -> class probabilities for distillation."""
    def predict_tokens(token_seqs):
        encoded = []
        for tokens in token_seqs:
            sent = Sentence(id=-1, raw=" ".join(tokens), tokens=tuple(tokens))
            starts = [m.start for m in matcher.find_mentions(sent)]
            encoded.append(encode_input(list(tokens), starts, vocab, max_len))
        _, probs = predict(model, encoded)
        return probs.numpy()
    return predict_tokens


def stage_distill(cfg: PipelineConfig) -> Path:
    out = _stage_dir(cfg, "distill")
    if cfg.finetune.task != "classification":
        raise ValueError("distillation supports the classification task only")
    model, vocab, classes, matcher = load_teacher(cfg)
    max_len = cfg.model.to_model_config().max_len
    teacher = teacher_predict_fn(model, vocab, classes, matcher, max_len)

    train_file = _task_path(cfg, "classification_train", "class_train.tsv")
    test_file = _task_path(cfg, "classification_test", "class_test.tsv")
    unlabeled_file = _task_path(cfg, "unlabeled", "unlabeled.txt")
    train = load_classification_tsv(train_file)
    test = load_classification_tsv(test_file)
    unlabeled = [tuple(tokenize(line)) for line in
                 unlabeled_file.read_text().splitlines() if line.strip()]

    class_index = {c: i for i, c in enumerate(classes)}
    golden_probs = teacher([tokens for tokens, _ in train])
    examples = [
        DistillExample(tokens=tuple(tokens), label=class_index[label],
                       teacher_probs=p, origin="golden")
        for (tokens, label), p in zip(train, golden_probs)
    ] + pseudo_label(teacher, unlabeled)

    student_cfg = StudentConfig(
        embedding_dim=cfg.distill.embedding_dim,
        window_widths=tuple(cfg.distill.window_widths),
        filters_per_width=cfg.distill.filters_per_width,
        n_classes=len(classes),
        soft_target_weight=cfg.distill.soft_target_weight)
    student = TextCNN(student_cfg, len(vocab), seed=cfg.seed)
    train_student(student, examples, vocab,
                  DistillTrainConfig(epochs=cfg.distill.epochs,
                                     lr=cfg.distill.lr,
                                     batch_size=cfg.distill.batch_size,
                                     seed=cfg.seed))

    test_tokens = [tokens for tokens, _ in test]
    golds = [label for _, label in test]
    teacher_preds = [classes[int(i)] for i in teacher(test_tokens).argmax(1)]
    student_preds = [classes[int(i)] for i in
                     student_predict(student, test_tokens, vocab).argmax(1)]
    teacher_metric = f1_score(teacher_preds, golds, classes)["macro"]
    student_metric = f1_score(student_preds, golds, classes)["macro"]

    knn.save_checkpoint(
        student, {"student": student_cfg.to_dict(), "vocab_size": len(vocab)},
        out / "student")
    _json_dump({
        "teacher_metric": teacher_metric,
        "student_metric": student_metric,
        "gap": teacher_metric - student_metric,
        "teacher_params": knn.count_parameters(model),
        "student_params_excl_embedding": student.parameter_count(
            exclude_embedding=True),
        "n_golden": len(train),
        "n_pseudo": len(unlabeled),
        "soft_target_weight": cfg.distill.soft_target_weight,
    }, out / "report.json")
    _write_manifest(out, "distill", cfg,
                    [train_file, test_file, unlabeled_file])
    return out


def stage_eval(cfg: PipelineConfig) -> Path:
    out = _stage_dir(cfg, "eval")
    finetune_report = _require(
        Path(cfg.workdir) / "finetune" / "report.json", "finetune")
    report = {"finetune": json.loads(finetune_report.read_text())}
    inputs = [finetune_report]

    model, vocab, classes, matcher = load_teacher(cfg)
    max_len = cfg.model.to_model_config().max_len
    if cfg.finetune.task == "classification":
        test_file = _task_path(cfg, "classification_test", "class_test.tsv")
        test = load_classification_tsv(test_file)
        metric, probs = _classification_metric(
            model, test, classes, matcher, vocab, max_len)
        report["teacher"] = {
            "macro_f1": metric,
            "mean_max_prob": float(probs.max(dim=-1).values.mean()),
            "mean_variance": float(probs.var(dim=-1, unbiased=False).mean()),
        }
    else:
        test_file = _task_path(cfg, "matching_test", "match_test.tsv")
        test = load_matching_tsv(test_file)
        metric, probs = _matching_metric(model, test, matcher, vocab, max_len)
        report["teacher"] = {"auc": metric}
    inputs.append(test_file)

    distill_report = Path(cfg.workdir) / "distill" / "report.json"
    if distill_report.exists():
        report["distill"] = json.loads(distill_report.read_text())
        inputs.append(distill_report)
    _json_dump(report, out / "report.json")
    _write_manifest(out, "eval", cfg, inputs)
    return out


def stage_bench(cfg: PipelineConfig) -> Path:
    out = _stage_dir(cfg, "bench")
    model, vocab, classes, matcher = load_teacher(cfg)
    student_dir = _require(
        Path(cfg.workdir) / "distill" / "student" / "manifest.json",
        "distill").parent
    student_manifest = json.loads((student_dir / "manifest.json").read_text())
    student_cfg_dict = student_manifest["config"]["student"]
    student_cfg = StudentConfig(
        embedding_dim=student_cfg_dict["embedding_dim"],
        window_widths=tuple(student_cfg_dict["window_widths"]),
        filters_per_width=student_cfg_dict["filters_per_width"],
        n_classes=student_cfg_dict["n_classes"],
        soft_target_weight=student_cfg_dict["soft_target_weight"])
    student = TextCNN(student_cfg, len(vocab), seed=cfg.seed)
    knn.load_checkpoint(student, student_manifest["config"],
                        student_dir)

    test_file = _task_path(cfg, "classification_test", "class_test.tsv")
    test = load_classification_tsv(test_file)
    examples = [tokens for tokens, _ in test][:cfg.bench.examples]
    max_len = cfg.model.to_model_config().max_len

    def teacher_one(tokens):
        sent = Sentence(id=-1, raw=" ".join(tokens), tokens=tuple(tokens))
        starts = [m.start for m in matcher.find_mentions(sent)]
        enc = encode_input(list(tokens), starts, vocab, max_len)
        ids, pad_mask, weights = collate([enc])
        with torch.no_grad():
            return model(ids, pad_mask, weights).argmax()

    min_len = max(student_cfg.window_widths)

    def student_one(tokens):
        ids = collate_tokens([tokens], vocab, min_len)
        with torch.no_grad():
            return student(ids).argmax()

    result = speed_benchmark(teacher_one, student_one, examples,
                             repetitions=cfg.bench.repetitions)
    result["teacher_params"] = knn.count_parameters(model)
    result["student_params_excl_embedding"] = student.parameter_count(True)
    _json_dump(result, out / "report.json")
    _write_manifest(out, "bench", cfg, [test_file])
    return out
