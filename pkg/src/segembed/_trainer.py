"""Shared training engine behind the disentangle and siamese modules.

Builds per-batch autodiff graphs from the neuralcore forwards, mines pairs
on detached embeddings, and applies the seeded optimizer. Every random draw
comes from a generator derived from (config seed, step tag), so skipping an
optional loss term never shifts any other stream: a joint run with zero
contrastive weight is bit-identical to plain disentanglement training.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from . import neuralcore as nc
from .corpus import Corpus, make_batches
from .errors import ConfigError, DataError
from .pairmine import DistanceCounter, PairSets, knn_graph_pairs, topk_global_pairs
from .seeding import derive_seed, rng_for

EMBED_CHUNK = 256


@dataclass(frozen=True)
class DisentangledModel:
    """Trained parameter set: both encoders, decoder, and discriminator."""

    dims: nc.ModelDims
    e_p: nc.ComponentParams
    e_s: nc.ComponentParams
    dec: nc.ComponentParams
    d_s: nc.ComponentParams


@dataclass(frozen=True)
class RefineModel:
    """Trained refinement transform applied on top of a frozen base model."""

    dims: nc.ModelDims
    params: nc.ComponentParams


def effective_speakers(corpus: Corpus):
    """Speaker id per segment, falling back to the utterance id (segments of
    one utterance are assumed to share a speaker)."""
    out = []
    for seg in corpus.segments:
        if seg.speaker_id is not None:
            out.append(seg.speaker_id)
        elif seg.utterance_id:
            out.append(f"utt:{seg.utterance_id}")
        else:
            raise DataError(
                f"segment {seg.segment_id!r} has neither speaker_id nor utterance_id"
            )
    return out


# -- loss graphs ----------------------------------------------------------


def recon_graph(x_rec, frames: np.ndarray, lengths) -> ad.Tensor:
    """Batch mean of per-segment mean squared reconstruction error."""
    f_dim = frames.shape[1]
    w = np.concatenate(
        [np.full(n, 1.0 / (len(lengths) * n * f_dim)) for n in lengths]
    ).reshape(-1, 1)
    return ad.tsum(ad.square(x_rec - ad.constant(frames)) * ad.constant(w))


def _pair_sq_dists(vectors, pairs) -> ad.Tensor:
    left = ad.take_rows(vectors, [p[0] for p in pairs])
    right = ad.take_rows(vectors, [p[1] for p in pairs])
    return ad.tsum(ad.square(left - right), axis=1)


def _hinge_sq_sum(vectors, pairs, margin: float) -> ad.Tensor:
    dist = ad.sqrt(_pair_sq_dists(vectors, pairs))
    return ad.tsum(ad.square(ad.relu(margin - dist)))


def contrastive_graph(vectors, pairs: PairSets, margin: float) -> ad.Tensor:
    """Sum of positive squared distances and negative squared hinges,
    divided by the total pair count."""
    n_pairs = len(pairs.positives) + len(pairs.negatives)
    if n_pairs == 0:
        raise DataError("contrastive loss needs at least one pair")
    terms = []
    if pairs.positives:
        terms.append(ad.tsum(_pair_sq_dists(vectors, pairs.positives)))
    if pairs.negatives:
        terms.append(_hinge_sq_sum(vectors, pairs.negatives, margin))
    total = terms[0] if len(terms) == 1 else terms[0] + terms[1]
    return total * (1.0 / n_pairs)


def speaker_contrastive_graph(vectors, speakers, margin: float) -> ad.Tensor:
    """Same/different-speaker contrastive loss over all unordered pairs."""
    n = len(speakers)
    same = [(i, j) for i in range(n) for j in range(i + 1, n) if speakers[i] == speakers[j]]
    diff = [(i, j) for i in range(n) for j in range(i + 1, n) if speakers[i] != speakers[j]]
    n_pairs = len(same) + len(diff)
    if n_pairs == 0:
        raise DataError("speaker contrastive loss needs at least 2 vectors")
    terms = []
    if same:
        terms.append(ad.tsum(_pair_sq_dists(vectors, same)))
    if diff:
        terms.append(_hinge_sq_sum(vectors, diff, margin))
    total = terms[0] if len(terms) == 1 else terms[0] + terms[1]
    return total * (1.0 / n_pairs)


def bce_graph(logits, targets) -> ad.Tensor:
    """Mean binary cross-entropy from logits (stable softplus form)."""
    t = ad.constant(np.asarray(targets, dtype=np.float64))
    return ad.tmean(ad.softplus(logits) - t * logits)


# -- pair sampling / mining ------------------------------------------------


def _sample_speaker_pairs(speakers, limit: int, rng):
    """Up to `limit` same-speaker and `limit` different-speaker index pairs."""
    n = len(speakers)
    same = [(i, j) for i in range(n) for j in range(i + 1, n) if speakers[i] == speakers[j]]
    diff = [(i, j) for i in range(n) for j in range(i + 1, n) if speakers[i] != speakers[j]]
    picked, flags = [], []
    for pool, flag in ((same, 1.0), (diff, 0.0)):
        take = min(limit, len(pool))
        if take:
            idx = rng.choice(len(pool), size=take, replace=False)
            picked.extend(pool[int(i)] for i in idx)
            flags.extend([flag] * take)
    return picked, np.asarray(flags)


def mine_pairs(vectors: np.ndarray, cfg_s, epoch: int, batch_index: int,
               counter: DistanceCounter | None = None) -> PairSets:
    """Mine pairs for one batch per the siamese config (seeded per step)."""
    seed = derive_seed(cfg_s.seed, f"mine:{epoch}:{batch_index}")
    if cfg_s.mining_mode == "knn_graph":
        return knn_graph_pairs(vectors, cfg_s.k, counter=counter)
    if cfg_s.mining_mode == "topk_global":
        return topk_global_pairs(vectors, cfg_s.k, seed, counter=counter)
    raise ConfigError(f"unknown mining_mode {cfg_s.mining_mode!r}")


# -- training loops ----------------------------------------------------------


def _grads(tensors: dict) -> dict:
    return {
        k: (t.grad if t.grad is not None else np.zeros_like(t.data))
        for k, t in tensors.items()
    }


def run_disentangle_training(corpus: Corpus, cfg, cfg_s=None):
    """Disentanglement training; with cfg_s (and gamma > 0) the encoder
    objective additionally minimizes the mined-pair contrastive loss on the
    batch's current phonetic embeddings (joint training).

    Returns (DisentangledModel, per-epoch loss log rows).
    """
    speakers_all = effective_speakers(corpus)
    dims = nc.ModelDims(
        feature_dim=corpus.feature_dim,
        embed_dim=cfg.embed_dim,
        enc_hidden=cfg.enc_hidden,
        dec_hidden=cfg.dec_hidden,
        disc_hidden=cfg.disc_hidden,
        encoder_mode=cfg.encoder_mode,
    )
    e_p = nc.init_encoder(dims, derive_seed(cfg.seed, "init:E_p"))
    e_s = nc.init_encoder(dims, derive_seed(cfg.seed, "init:E_s"))
    dec = nc.init_decoder(dims, derive_seed(cfg.seed, "init:Dec"))
    d_s = nc.init_discriminator(dims, derive_seed(cfg.seed, "init:D_s"))
    disc_lr = getattr(cfg, "disc_learning_rate", None) or cfg.learning_rate
    opt = {
        "E_p": nc.init_optim(e_p, cfg.learning_rate),
        "E_s": nc.init_optim(e_s, cfg.learning_rate),
        "Dec": nc.init_optim(dec, cfg.learning_rate),
        "D_s": nc.init_optim(d_s, disc_lr),
    }
    joint = cfg_s is not None and cfg_s.gamma > 0
    warmup = getattr(cfg, "disc_warmup_epochs", 0)
    counter = DistanceCounter()
    rows = []
    for epoch in range(cfg.epochs):
        batches = make_batches(
            corpus, cfg.batch_size, derive_seed(cfg.seed, f"batches:{epoch}"),
            cfg.drop_last,
        )
        if not batches:
            raise DataError("no batches: corpus smaller than batch_size with drop_last")
        sums = {"recon": 0.0, "spk": 0.0, "adv": 0.0, "disc": 0.0, "contrastive": 0.0}
        pos_pairs = neg_pairs = 0
        evals_before = counter.count
        for bi, batch in enumerate(batches):
            segs = [corpus[i] for i in batch.indices]
            frames, lengths = nc.pack_sequences([s.features for s in segs])
            spk = [speakers_all[i] for i in batch.indices]

            pair_idx, same_flags = [], None
            if cfg.alpha_adv > 0:
                rng = rng_for(cfg.seed, f"dpairs:{epoch}:{bi}")
                pair_idx, same_flags = _sample_speaker_pairs(spk, batch.size, rng)
                vp_const = nc.encoder_forward(
                    e_p.tensors(), frames, lengths, mode=dims.encoder_mode
                ).data
                ia = [p[0] for p in pair_idx]
                ib = [p[1] for p in pair_idx]
                for _ in range(cfg.disc_steps):
                    dt = d_s.tensors(requires_grad=True)
                    logits = nc.discriminator_forward(dt, vp_const[ia], vp_const[ib])
                    disc_loss = bce_graph(logits, same_flags)
                    disc_loss.backward()
                    d_s, opt["D_s"] = nc.grad_step(d_s, _grads(dt), opt["D_s"])
                sums["disc"] += disc_loss.item()

            ep_t = e_p.tensors(requires_grad=True)
            es_t = e_s.tensors(requires_grad=True)
            dec_t = dec.tensors(requires_grad=True)
            v_p = nc.encoder_forward(ep_t, frames, lengths, mode=dims.encoder_mode)
            v_s = nc.encoder_forward(es_t, frames, lengths, mode=dims.encoder_mode)
            x_rec = nc.decoder_forward(dec_t, v_p, v_s, lengths)

            loss = recon_graph(x_rec, frames, lengths)
            sums["recon"] += loss.item()
            if cfg.alpha_spk > 0:
                spk_loss = speaker_contrastive_graph(v_s, spk, cfg.margin)
                sums["spk"] += spk_loss.item()
                loss = loss + cfg.alpha_spk * spk_loss
            if cfg.alpha_adv > 0 and epoch >= warmup:
                ia = [p[0] for p in pair_idx]
                ib = [p[1] for p in pair_idx]
                logits = nc.discriminator_forward(
                    d_s.tensors(), ad.take_rows(v_p, ia), ad.take_rows(v_p, ib)
                )
                adv_loss = bce_graph(logits, 1.0 - same_flags)
                sums["adv"] += adv_loss.item()
                loss = loss + cfg.alpha_adv * adv_loss
            if joint:
                pairs = mine_pairs(v_p.data, cfg_s, epoch, bi, counter)
                c_loss = contrastive_graph(v_p, pairs, cfg_s.margin)
                sums["contrastive"] += c_loss.item()
                pos_pairs += len(pairs.positives)
                neg_pairs += len(pairs.negatives)
                loss = loss + cfg_s.gamma * c_loss

            loss.backward()
            e_p, opt["E_p"] = nc.grad_step(e_p, _grads(ep_t), opt["E_p"])
            e_s, opt["E_s"] = nc.grad_step(e_s, _grads(es_t), opt["E_s"])
            dec, opt["Dec"] = nc.grad_step(dec, _grads(dec_t), opt["Dec"])

        n_b = len(batches)
        row = {
            "epoch": epoch + 1,
            "recon": sums["recon"] / n_b,
            "spk": sums["spk"] / n_b,
            "adv": sums["adv"] / n_b,
            "disc": sums["disc"] / n_b,
        }
        if joint:
            row.update(
                contrastive=sums["contrastive"] / n_b,
                pos_pairs=pos_pairs,
                neg_pairs=neg_pairs,
                dist_evals=counter.count - evals_before,
            )
        rows.append(row)
    return DisentangledModel(dims, e_p, e_s, dec, d_s), rows


def run_refine_training(corpus: Corpus, base: DisentangledModel, cfg_s):
    """Train the refinement transform on frozen phonetic embeddings.

    Returns (RefineModel, per-epoch loss log rows).
    """
    dims = replace(base.dims, refine_hidden=cfg_s.refine_hidden)
    frozen = compute_embeddings(base, corpus, which="phonetic")
    params = nc.init_refine(dims, derive_seed(cfg_s.seed, "init:refine"), identity=True)
    opt = nc.init_optim(params, cfg_s.learning_rate)
    counter = DistanceCounter()
    rows = []
    for epoch in range(cfg_s.epochs):
        batches = make_batches(
            corpus, cfg_s.batch_size, derive_seed(cfg_s.seed, f"batches:{epoch}"),
            cfg_s.drop_last,
        )
        if not batches:
            raise DataError("no batches: corpus smaller than batch_size with drop_last")
        total = 0.0
        pos_pairs = neg_pairs = 0
        evals_before = counter.count
        for bi, batch in enumerate(batches):
            v_batch = frozen[list(batch.indices)]
            pairs = mine_pairs(v_batch, cfg_s, epoch, bi, counter)
            rt = params.tensors(requires_grad=True)
            z = nc.refine_forward(rt, v_batch)
            loss = contrastive_graph(z, pairs, cfg_s.margin)
            total += loss.item()
            pos_pairs += len(pairs.positives)
            neg_pairs += len(pairs.negatives)
            loss.backward()
            params, opt = nc.grad_step(params, _grads(rt), opt)
        rows.append(
            {
                "epoch": epoch + 1,
                "contrastive": total / len(batches),
                "pos_pairs": pos_pairs,
                "neg_pairs": neg_pairs,
                "dist_evals": counter.count - evals_before,
            }
        )
    return RefineModel(dims, params), rows


# -- checkpoint wrappers ------------------------------------------------------


def save_model(path, model: DisentangledModel, extra_meta: dict | None = None):
    """Write a disentangled model as a single checkpoint document."""
    meta = {"kind": "disentangled", "dims": vars(model.dims).copy()}
    meta.update(extra_meta or {})
    nc.save_checkpoint(
        path,
        {"E_p": model.e_p, "E_s": model.e_s, "Dec": model.dec, "D_s": model.d_s},
        meta,
    )


def load_model(path) -> DisentangledModel:
    components, meta = nc.load_checkpoint(path)
    if meta.get("kind") != "disentangled":
        raise DataError(f"{path}: not a disentangled-model checkpoint")
    dims = nc.ModelDims(**meta["dims"])
    return DisentangledModel(
        dims,
        components["E_p"],
        components["E_s"],
        components["Dec"],
        components["D_s"],
    )


def save_refine_model(path, refine: RefineModel, extra_meta: dict | None = None):
    """Write a refinement transform as a single checkpoint document."""
    meta = {"kind": "refine", "dims": vars(refine.dims).copy()}
    meta.update(extra_meta or {})
    nc.save_checkpoint(path, {"refine": refine.params}, meta)


def load_refine_model(path) -> RefineModel:
    components, meta = nc.load_checkpoint(path)
    if meta.get("kind") != "refine":
        raise DataError(f"{path}: not a refinement checkpoint")
    return RefineModel(nc.ModelDims(**meta["dims"]), components["refine"])


# -- embedding extraction ----------------------------------------------------


def _encode_many(encoder: nc.ComponentParams, segments, mode: str) -> np.ndarray:
    out = []
    for start in range(0, len(segments), EMBED_CHUNK):
        chunk = segments[start : start + EMBED_CHUNK]
        frames, lengths = nc.pack_sequences([s.features for s in chunk])
        out.append(nc.encoder_forward(encoder.tensors(), frames, lengths, mode).data)
    return np.concatenate(out, axis=0)


def compute_embeddings(model: DisentangledModel, corpus: Corpus,
                       which: str = "phonetic") -> np.ndarray:
    """(M, d) embedding matrix in corpus order; values only, no tape kept."""
    encoder = {"phonetic": model.e_p, "speaker": model.e_s}[which]
    return _encode_many(encoder, list(corpus.segments), model.dims.encoder_mode)


def embed_entries(model: DisentangledModel, corpus: Corpus, variant: str,
                  refine: RefineModel | None = None):
    """One (segment_id, vector) per segment, ordered by segment_id.

    Variants a/b/c emit the phonetic vector; variant d applies the
    refinement transform on top of it.
    """
    if variant not in ("a", "b", "c", "d"):
        raise ConfigError(f"unknown embedding variant {variant!r}")
    if variant == "d" and refine is None:
        raise ConfigError("variant d requires refinement parameters")
    order = sorted(range(len(corpus)), key=lambda i: corpus[i].segment_id)
    segments = [corpus[i] for i in order]
    vectors = _encode_many(model.e_p, segments, model.dims.encoder_mode)
    if variant == "d":
        vectors = nc.refine_forward(refine.params.tensors(), vectors).data
    return [(seg.segment_id, vectors[i]) for i, seg in enumerate(segments)]
