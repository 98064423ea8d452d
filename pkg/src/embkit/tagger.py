"""Neural morphological tagger: frozen word vectors + char CNN -> BiLSTM.

Each token's input is the concatenation of its (external, read-only) word
embedding and character features produced by a convolution over character
embeddings followed by max-pooling.  A single bidirectional LSTM runs over
the sentence and two softmax heads jointly predict the part-of-speech tag
and the full morphological feature string of every token.

Everything is plain numpy with hand-written backpropagation so gradients can
be verified against finite differences; use dtype="float64" for that.
Training is true SGD, one sentence per step, with the time-based schedule
lr0 / (1 + decay * epoch).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from embkit.corpus import split_random
from embkit.errors import DataError, FormatError
from embkit.rng import SplitMix64, derive_seed
from embkit.store import EmbeddingStore

MAGIC = b"EMTG"
VERSION = 1

_INIT_SALT = 0x7A66
_SPLIT_SALT = 0xDE7A
_SHUFFLE_SALT = 0x51F5

UNKNOWN_CHAR = ""  # inventory slot 0; any character unseen in training


@dataclass
class TaggerConfig:
    lr0: float = 0.6
    decay: float = 0.05
    epochs: int = 200
    dev_fraction: float = 0.2
    seeds: tuple = tuple(range(10))
    char_emb_dim: int = 30
    char_conv_width: int = 3
    char_filters: int = 30
    lstm_hidden: int = 150
    dtype: str = "float32"

    def __post_init__(self):
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if not 0.0 < self.dev_fraction < 1.0:
            raise ValueError("dev_fraction must be in (0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if min(self.char_emb_dim, self.char_conv_width, self.char_filters,
               self.lstm_hidden) < 1:
            raise ValueError("architecture sizes must be positive")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")


class TagAccuracy(NamedTuple):
    upos: float
    feats: float


@dataclass
class TagReport:
    seeds: list  # per-seed dicts: seed, best_epoch, dev, test, dev_history
    average: dict

    def to_json_dict(self) -> dict:
        return {"seeds": self.seeds, "average": self.average}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


class TaggerModel:
    """Parameter set plus the tag/character inventories fixed at training."""

    def __init__(self, params, upos_tags, feats_tags, chars, word_dim, conv_width):
        self.params = params
        self.upos_tags = list(upos_tags)
        self.feats_tags = list(feats_tags)
        self.chars = list(chars)
        self.word_dim = word_dim
        self.conv_width = conv_width
        self.upos_index = {t: i for i, t in enumerate(self.upos_tags)}
        self.feats_index = {t: i for i, t in enumerate(self.feats_tags)}
        self.char_index = {c: i for i, c in enumerate(self.chars)}

    @property
    def dtype(self):
        return self.params["conv_w"].dtype

    def copy_params(self):
        return {name: arr.copy() for name, arr in self.params.items()}


_TENSOR_ORDER = (
    "char_emb",
    "conv_w",
    "conv_b",
    "fwd_wx",
    "fwd_wh",
    "fwd_b",
    "bwd_wx",
    "bwd_wh",
    "bwd_b",
    "upos_w",
    "upos_b",
    "feats_w",
    "feats_b",
)


def _uniform_array(rng: SplitMix64, shape, scale, dtype):
    u = rng.uniform_block(int(np.prod(shape)))
    return ((2.0 * u - 1.0) * scale).reshape(shape).astype(dtype)


def init_model(train_sentences, store: EmbeddingStore, config: TaggerConfig,
               seed: int) -> TaggerModel:
    """Build inventories from the training sentences and initialize weights."""
    upos = sorted({tok.upos for sent in train_sentences for tok in sent})
    feats = sorted({tok.feats for sent in train_sentences for tok in sent})
    chars = [UNKNOWN_CHAR] + sorted(
        {ch for sent in train_sentences for tok in sent for ch in tok.form}
    )
    if not upos or not feats:
        raise DataError("training sentences carry no tags")
    dtype = np.dtype(config.dtype)
    rng = SplitMix64(derive_seed(seed, _INIT_SALT))
    ce, width, nf = config.char_emb_dim, config.char_conv_width, config.char_filters
    hidden = config.lstm_hidden
    input_dim = store.dim + nf
    params = {
        "char_emb": _uniform_array(rng, (len(chars), ce), 0.1, dtype),
        "conv_w": _uniform_array(rng, (nf, width * ce), 1.0 / np.sqrt(width * ce), dtype),
        "conv_b": np.zeros(nf, dtype=dtype),
    }
    for direction in ("fwd", "bwd"):
        params[f"{direction}_wx"] = _uniform_array(
            rng, (4 * hidden, input_dim), 1.0 / np.sqrt(input_dim), dtype
        )
        params[f"{direction}_wh"] = _uniform_array(
            rng, (4 * hidden, hidden), 1.0 / np.sqrt(hidden), dtype
        )
        params[f"{direction}_b"] = np.zeros(4 * hidden, dtype=dtype)
    for head, size in (("upos", len(upos)), ("feats", len(feats))):
        params[f"{head}_w"] = _uniform_array(
            rng, (size, 2 * hidden), 1.0 / np.sqrt(2 * hidden), dtype
        )
        params[f"{head}_b"] = np.zeros(size, dtype=dtype)
    return TaggerModel(params, upos, feats, chars, store.dim, width)


# -- char CNN ---------------------------------------------------------------


def _char_windows(model: TaggerModel, token: str):
    """Stacked same-padded convolution windows, one row per character."""
    ids = [model.char_index.get(ch, 0) for ch in token]
    emb = model.params["char_emb"]
    ce = emb.shape[1]
    width = model.conv_width
    pad_left = (width - 1) // 2
    length = len(ids)
    padded = np.zeros((length + width - 1, ce), dtype=emb.dtype)
    padded[pad_left : pad_left + length] = emb[ids]
    windows = np.empty((length, width * ce), dtype=emb.dtype)
    for t in range(length):
        windows[t] = padded[t : t + width].reshape(-1)
    return ids, windows


def _char_forward(model: TaggerModel, token: str):
    ids, windows = _char_windows(model, token)
    acts = windows @ model.params["conv_w"].T + model.params["conv_b"]
    argmax = acts.argmax(axis=0)
    feat = acts[argmax, np.arange(acts.shape[1])]
    return feat, (ids, windows, argmax)


def _char_backward(model: TaggerModel, grads, cache, dfeat):
    ids, windows, argmax = cache
    conv_w = model.params["conv_w"]
    ce = model.params["char_emb"].shape[1]
    width = model.conv_width
    pad_left = (width - 1) // 2
    length = len(ids)
    dacts = np.zeros((length, conv_w.shape[0]), dtype=conv_w.dtype)
    dacts[argmax, np.arange(conv_w.shape[0])] = dfeat
    grads["conv_w"] += dacts.T @ windows
    grads["conv_b"] += dacts.sum(axis=0)
    dwindows = dacts @ conv_w
    dpadded = np.zeros((length + width - 1, ce), dtype=conv_w.dtype)
    for t in range(length):
        dpadded[t : t + width] += dwindows[t].reshape(width, ce)
    demb = dpadded[pad_left : pad_left + length]
    np.add.at(grads["char_emb"], ids, demb)


# -- token features ----------------------------------------------------------


def _word_vector(model: TaggerModel, store: EmbeddingStore, token: str):
    """Exact-form lookup, lowercase fallback, else a zero vector."""
    vec = store.vector(token)
    if vec is None:
        vec = store.vector(token.lower())
    if vec is None:
        return np.zeros(store.dim, dtype=model.dtype)
    return vec.astype(model.dtype)


def token_features(model: TaggerModel, store: EmbeddingStore, token: str):
    """Network input for one token: [word embedding; char-CNN features]."""
    if not token:
        raise ValueError("token must be non-empty")
    feat, _ = _char_forward(model, token)
    return np.concatenate([_word_vector(model, store, token), feat])


# -- LSTM --------------------------------------------------------------------


def _lstm_forward(wx, wh, b, xs):
    """Standard LSTM over (T, D) inputs; returns hidden states and caches."""
    hidden = wh.shape[1]
    steps = xs.shape[0]
    dtype = wx.dtype
    gates_i = np.empty((steps, hidden), dtype=dtype)
    gates_f = np.empty((steps, hidden), dtype=dtype)
    gates_g = np.empty((steps, hidden), dtype=dtype)
    gates_o = np.empty((steps, hidden), dtype=dtype)
    cells = np.empty((steps, hidden), dtype=dtype)
    cell_tanh = np.empty((steps, hidden), dtype=dtype)
    hs = np.empty((steps, hidden), dtype=dtype)
    h_prev = np.zeros(hidden, dtype=dtype)
    c_prev = np.zeros(hidden, dtype=dtype)
    for t in range(steps):
        pre = wx @ xs[t] + wh @ h_prev + b
        i = _sigmoid(pre[:hidden])
        f = _sigmoid(pre[hidden : 2 * hidden])
        g = np.tanh(pre[2 * hidden : 3 * hidden])
        o = _sigmoid(pre[3 * hidden :])
        c = f * c_prev + i * g
        hc = np.tanh(c)
        h = o * hc
        gates_i[t], gates_f[t], gates_g[t], gates_o[t] = i, f, g, o
        cells[t], cell_tanh[t], hs[t] = c, hc, h
        h_prev, c_prev = h, c
    return hs, (xs, gates_i, gates_f, gates_g, gates_o, cells, cell_tanh, hs)


def _lstm_backward(wx, wh, cache, dhs):
    xs, gi, gf, gg, go, cells, cell_tanh, hs = cache
    hidden = wh.shape[1]
    steps = xs.shape[0]
    dtype = wx.dtype
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * hidden, dtype=dtype)
    dxs = np.zeros_like(xs)
    dh_next = np.zeros(hidden, dtype=dtype)
    dc_next = np.zeros(hidden, dtype=dtype)
    for t in range(steps - 1, -1, -1):
        dh = dhs[t] + dh_next
        c_prev = cells[t - 1] if t > 0 else np.zeros(hidden, dtype=dtype)
        h_prev = hs[t - 1] if t > 0 else np.zeros(hidden, dtype=dtype)
        do = dh * cell_tanh[t]
        dc = dc_next + dh * go[t] * (1.0 - cell_tanh[t] ** 2)
        df = dc * c_prev
        di = dc * gg[t]
        dg = dc * gi[t]
        dpre = np.concatenate(
            [
                di * gi[t] * (1.0 - gi[t]),
                df * gf[t] * (1.0 - gf[t]),
                dg * (1.0 - gg[t] ** 2),
                do * go[t] * (1.0 - go[t]),
            ]
        )
        dwx += np.outer(dpre, xs[t])
        dwh += np.outer(dpre, h_prev)
        db += dpre
        dxs[t] = wx.T @ dpre
        dh_next = wh.T @ dpre
        dc_next = dc * gf[t]
    return dxs, dwx, dwh, db


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


# -- forward / loss ----------------------------------------------------------


def _sentence_forward(model: TaggerModel, store: EmbeddingStore, sentence):
    """Run the full network over one sentence, keeping caches for backward."""
    params = model.params
    char_caches = []
    xs = np.empty(
        (len(sentence), model.word_dim + params["conv_w"].shape[0]),
        dtype=model.dtype,
    )
    for t, tok in enumerate(sentence):
        feat, cache = _char_forward(model, tok.form)
        char_caches.append(cache)
        xs[t, : model.word_dim] = _word_vector(model, store, tok.form)
        xs[t, model.word_dim :] = feat
    h_fwd, fwd_cache = _lstm_forward(params["fwd_wx"], params["fwd_wh"], params["fwd_b"], xs)
    h_bwd_rev, bwd_cache = _lstm_forward(
        params["bwd_wx"], params["bwd_wh"], params["bwd_b"], xs[::-1].copy()
    )
    h_cat = np.concatenate([h_fwd, h_bwd_rev[::-1]], axis=1)
    logits_upos = h_cat @ params["upos_w"].T + params["upos_b"]
    logits_feats = h_cat @ params["feats_w"].T + params["feats_b"]
    return logits_upos, logits_feats, (char_caches, fwd_cache, bwd_cache, h_cat)


def forward(model: TaggerModel, store: EmbeddingStore, sentence):
    """Per-token logits for both heads: (T, |UPOS|) and (T, |FEATS|)."""
    if not sentence:
        raise ValueError("sentence must be non-empty")
    logits_upos, logits_feats, _ = _sentence_forward(model, store, sentence)
    return logits_upos, logits_feats


def _log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits):
    logp = _log_softmax(np.asarray(logits, dtype=np.float64))
    return np.exp(logp)


def loss_and_gradients(model: TaggerModel, store: EmbeddingStore, batch):
    """Joint cross-entropy (mean over tokens of CE_upos + CE_feats) + grads.

    The word embedding table is external and frozen: no gradient flows to it.
    Raises DataError when a gold tag is missing from the model inventories.
    """
    grads = {name: np.zeros_like(arr) for name, arr in model.params.items()}
    total_tokens = sum(len(s) for s in batch)
    if total_tokens == 0:
        raise DataError("batch contains no tokens")
    scale = model.dtype.type(1.0 / total_tokens)
    loss = 0.0
    params = model.params
    for sentence in batch:
        gold_u = []
        gold_f = []
        for tok in sentence:
            if tok.upos not in model.upos_index:
                raise DataError(f"UPOS tag {tok.upos!r} not in model inventory")
            if tok.feats not in model.feats_index:
                raise DataError(f"FEATS label {tok.feats!r} not in model inventory")
            gold_u.append(model.upos_index[tok.upos])
            gold_f.append(model.feats_index[tok.feats])
        logits_u, logits_f, caches = _sentence_forward(model, store, sentence)
        char_caches, fwd_cache, bwd_cache, h_cat = caches
        steps = len(sentence)
        rows = np.arange(steps)
        dh_cat = np.zeros_like(h_cat)
        for head, logits, gold in (
            ("upos", logits_u, gold_u),
            ("feats", logits_f, gold_f),
        ):
            logp = _log_softmax(logits)
            loss += -float(logp[rows, gold].sum()) / total_tokens
            dlogits = np.exp(logp)
            dlogits[rows, gold] -= 1.0
            dlogits = (dlogits * scale).astype(model.dtype)
            grads[f"{head}_w"] += dlogits.T @ h_cat
            grads[f"{head}_b"] += dlogits.sum(axis=0)
            dh_cat += dlogits @ params[f"{head}_w"]
        hidden = params["fwd_wh"].shape[1]
        dxs_fwd, dwx, dwh, db = _lstm_backward(
            params["fwd_wx"], params["fwd_wh"], fwd_cache, dh_cat[:, :hidden]
        )
        grads["fwd_wx"] += dwx
        grads["fwd_wh"] += dwh
        grads["fwd_b"] += db
        dxs_bwd_rev, dwx, dwh, db = _lstm_backward(
            params["bwd_wx"], params["bwd_wh"], bwd_cache, dh_cat[::-1, hidden:]
        )
        grads["bwd_wx"] += dwx
        grads["bwd_wh"] += dwh
        grads["bwd_b"] += db
        dxs = dxs_fwd + dxs_bwd_rev[::-1]
        for t in range(steps):
            _char_backward(model, grads, char_caches[t], dxs[t, model.word_dim :])
        # dxs[:, :word_dim] would be the word-embedding gradient; dropped.
    return loss, grads


# -- prediction / evaluation ---------------------------------------------------


def predict_tags(model: TaggerModel, store: EmbeddingStore, sentence):
    logits_u, logits_f, _ = _sentence_forward(model, store, sentence)
    upos = [model.upos_tags[i] for i in logits_u.argmax(axis=1)]
    feats = [model.feats_tags[i] for i in logits_f.argmax(axis=1)]
    return upos, feats


def evaluate_tagger(model: TaggerModel, store: EmbeddingStore, sentences) -> TagAccuracy:
    """Token-level accuracies; FEATS requires an exact full-string match."""
    total = upos_hits = feats_hits = 0
    for sentence in sentences:
        if not sentence:
            continue
        upos, feats = predict_tags(model, store, sentence)
        for tok, pu, pf in zip(sentence, upos, feats):
            total += 1
            upos_hits += int(pu == tok.upos)
            feats_hits += int(pf == tok.feats)
    if total == 0:
        return TagAccuracy(0.0, 0.0)
    return TagAccuracy(upos_hits / total, feats_hits / total)


def learning_rate(config: TaggerConfig, epoch: int) -> float:
    """Time-based decay: lr0 / (1 + decay * epoch)."""
    return config.lr0 / (1.0 + config.decay * epoch)


def train_tagger(train_sentences, store: EmbeddingStore, config: TaggerConfig,
                 test_sentences=None):
    """Train once per seed, keeping each seed's best-dev-epoch parameters.

    For every seed, dev_fraction of the sentences is detached as a
    development set, the network is trained for config.epochs epochs of
    per-sentence SGD, and the parameters of the epoch with the highest mean
    of the two dev accuracies are kept (earlier epoch wins ties).  Returns
    the best model across seeds plus a report with per-seed and averaged
    dev (and optional test) accuracies.
    """
    train_sentences = [s for s in train_sentences if s]
    if not train_sentences:
        raise DataError("training treebank is empty")
    seed_rows = []
    best_model = None
    best_score = -1.0
    for seed in config.seeds:
        train_part, dev_part = split_random(
            train_sentences, config.dev_fraction, derive_seed(seed, _SPLIT_SALT)
        )
        if not dev_part or not train_part:
            raise DataError("development split is empty; need more sentences")
        model = init_model(train_sentences, store, config, seed)
        shuffle_rng = SplitMix64(derive_seed(seed, _SHUFFLE_SALT))
        order = list(range(len(train_part)))
        best = {"score": -1.0, "epoch": -1, "params": None, "dev": None}
        history = []
        for epoch in range(config.epochs):
            lr = model.dtype.type(learning_rate(config, epoch))
            shuffle_rng.shuffle(order)
            for idx in order:
                _, grads = loss_and_gradients(model, store, [train_part[idx]])
                for name, grad in grads.items():
                    model.params[name] -= lr * grad
            dev = evaluate_tagger(model, store, dev_part)
            history.append({"epoch": epoch, "upos": dev.upos, "feats": dev.feats})
            score = (dev.upos + dev.feats) / 2.0
            if score > best["score"]:
                best = {
                    "score": score,
                    "epoch": epoch,
                    "params": model.copy_params(),
                    "dev": dev,
                }
        model.params = best["params"]
        row = {
            "seed": seed,
            "best_epoch": best["epoch"],
            "dev": {"upos": best["dev"].upos, "feats": best["dev"].feats},
            "dev_history": history,
        }
        if test_sentences is not None:
            test = evaluate_tagger(model, store, test_sentences)
            row["test"] = {"upos": test.upos, "feats": test.feats}
        seed_rows.append(row)
        if best["score"] > best_score:
            best_score = best["score"]
            best_model = model
    average = {
        "dev": {
            "upos": sum(r["dev"]["upos"] for r in seed_rows) / len(seed_rows),
            "feats": sum(r["dev"]["feats"] for r in seed_rows) / len(seed_rows),
        }
    }
    if test_sentences is not None:
        average["test"] = {
            "upos": sum(r["test"]["upos"] for r in seed_rows) / len(seed_rows),
            "feats": sum(r["test"]["feats"] for r in seed_rows) / len(seed_rows),
        }
    return best_model, TagReport(seed_rows, average)


# -- checkpoint format ---------------------------------------------------------


def save_tagger(model: TaggerModel, path):
    """Little-endian tensors after a JSON header naming shapes/inventories."""
    header = {
        "version": VERSION,
        "dtype": str(model.dtype),
        "word_dim": model.word_dim,
        "conv_width": model.conv_width,
        "upos": model.upos_tags,
        "feats": model.feats_tags,
        "chars": model.chars,
        "tensors": [
            [name, list(model.params[name].shape)] for name in _TENSOR_ORDER
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(blob)))
        f.write(blob)
        little = "<f4" if model.dtype == np.float32 else "<f8"
        for name in _TENSOR_ORDER:
            f.write(model.params[name].astype(little, copy=False).tobytes())


def load_tagger(path) -> TaggerModel:
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise FormatError("not a tagger checkpoint")
        version, header_len = struct.unpack("<II", f.read(8))
        if version != VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        header = json.loads(f.read(header_len).decode("utf-8"))
        dtype = np.dtype(header["dtype"])
        little = "<f4" if dtype == np.float32 else "<f8"
        params = {}
        for name, shape in header["tensors"]:
            count = int(np.prod(shape))
            data = f.read(count * dtype.itemsize)
            if len(data) != count * dtype.itemsize:
                raise FormatError(f"truncated tensor {name}")
            params[name] = np.frombuffer(data, dtype=little).reshape(shape).astype(dtype)
        if f.read(1):
            raise FormatError("trailing bytes after checkpoint payload")
    return TaggerModel(
        params,
        header["upos"],
        header["feats"],
        header["chars"],
        header["word_dim"],
        header["conv_width"],
    )
