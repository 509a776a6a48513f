#include "denselm/prune.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "denselm/flops.h"
#include "denselm/optim.h"
#include "denselm/rng.h"

namespace denselm {

namespace {

std::vector<NodeId> z_slice_nodes(Graph& g, NodeId z_node, int count) {
  std::vector<NodeId> out;
  for (int l = 0; l < count; ++l) out.push_back(g.slice_cols(z_node, l, l + 1));
  return out;
}

LayerMask round_mask(const Param& z) {
  LayerMask m;
  for (double v : z.value.data) m.z.push_back(v >= 0.5 ? 1.0 : 0.0);
  return m;
}

void sync_mask(DenseStack& stack, const Param& z) {
  stack.mask.z.assign(z.value.data.begin(), z.value.data.end());
}

}  // namespace

std::string PruneReport::summary() const {
  std::ostringstream ss;
  ss << "steps: " << history.size() << "\n";
  ss << "binarized cleanly: " << (binarized_cleanly ? "yes" : "NO (hard rounding forced)")
     << " (gap " << binariness_gap << ")\n";
  auto mask_str = [](const LayerMask& m) {
    std::string s;
    for (double v : m.z) s += v > 0.5 ? '1' : '0';
    return s;
  };
  ss << "rounded z fwd: " << mask_str(rounded_fwd) << "\n";
  ss << "rounded z bwd: " << mask_str(rounded_bwd) << "\n";
  ss << "FLOPs before: " << static_cast<long long>(flops_before)
     << "  after: " << static_cast<long long>(flops_after) << "  ("
     << 100.0 * (1.0 - flops_after / flops_before) << "% cut)\n";
  ss << "dev F1 before: " << dev_f1_before << "  after: " << dev_f1_after << "\n";
  return ss.str();
}

std::string PruneReport::history_csv() const {
  std::ostringstream ss;
  ss << "step,penalty,z_l0_fwd,z_l0_bwd,dev_f1";
  if (!history.empty()) {
    for (size_t l = 0; l < history[0].z_fwd.size(); ++l) ss << ",z_fwd_" << l;
    for (size_t l = 0; l < history[0].z_bwd.size(); ++l) ss << ",z_bwd_" << l;
  }
  ss << "\n";
  for (const auto& h : history) {
    ss << h.step << ',' << h.penalty << ',' << h.z_l0_fwd << ',' << h.z_l0_bwd << ','
       << h.dev_f1;
    for (double v : h.z_fwd) ss << ',' << v;
    for (double v : h.z_bwd) ss << ',' << v;
    ss << "\n";
  }
  return ss.str();
}

PruneReport prune(TaggerModel& tagger, ContextEmbedder& emb,
                  const std::vector<TaggedSentence>& train,
                  const std::vector<TaggedSentence>& dev, const PruneConfig& cfg) {
  if (cfg.reg.kind == RegKind::kR0) {
    throw std::invalid_argument("prune: R0 is a reporting metric, not an objective");
  }
  if (!tagger.use_lm) throw std::invalid_argument("prune: tagger has no LM attached");
  const int lf = emb.fwd.stack.num_layers();
  const int lb = emb.bwd.stack.num_layers();
  if (cfg.tie_masks && lf != lb) {
    throw std::invalid_argument("prune: tied masks need equal layer counts");
  }

  PruneReport report;
  report.flops_before = estimate_flops(&emb, &tagger, cfg.chars_per_word).total();
  report.dev_f1_before = evaluate_tagger(tagger, &emb, dev).f1;
  const uint64_t lm_sum_before =
      lm_weight_checksum(emb.fwd) ^ (lm_weight_checksum(emb.bwd) << 1);

  Param z_fwd("z_fwd", Tensor(1, lf));
  Param z_bwd("z_bwd", Tensor(1, lb));
  z_fwd.value.data.assign(emb.fwd.stack.mask.z.begin(), emb.fwd.stack.mask.z.end());
  z_bwd.value.data.assign(emb.bwd.stack.mask.z.begin(), emb.bwd.stack.mask.z.end());

  auto params = tagger.params(&emb);
  SgdMomentum opt(params, cfg.momentum);
  std::vector<double> vbuf_f(static_cast<size_t>(lf), 0.0);
  std::vector<double> vbuf_b(static_cast<size_t>(lb), 0.0);
  const bool update_z = cfg.reg.lambda0 != 0.0;

  Rng rng(cfg.seed);
  Rng order_rng = rng.split("prune.order");
  Rng drop_rng = rng.split("prune.dropout");
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double lr = tagger_lr(cfg.eta0, cfg.rho, epoch);
    for (size_t b = 0; b < order.size(); b += static_cast<size_t>(cfg.batch)) {
      size_t end = std::min(order.size(), b + static_cast<size_t>(cfg.batch));
      for (Param* p : params) p->zero_grad();
      z_fwd.zero_grad();
      z_bwd.zero_grad();
      for (size_t k = b; k < end; ++k) {
        const TaggedSentence& s = train[order[k]];
        Graph g;
        NodeId zf_node = g.param(z_fwd);
        NodeId zb_node = cfg.tie_masks ? zf_node : g.param(z_bwd);
        auto zf = z_slice_nodes(g, zf_node, lf);
        auto zb = z_slice_nodes(g, zb_node, lb);
        auto feats = lm_feature_nodes(g, emb.fwd, emb.bwd, s.words, &zf, &zb);
        TaggerGraphOpts opts;
        opts.train = true;
        opts.dropout = cfg.dropout;
        opts.dropout_rng = &drop_rng;
        opts.embedder = &emb;
        opts.lm_feat_nodes = &feats;
        NodeId loss = g.scale(tagger_loss(g, tagger, s, opts),
                              1.0 / static_cast<double>(end - b));
        if (!std::isfinite(g.value(loss).data[0])) {
          throw std::runtime_error("prune diverged at epoch " + std::to_string(epoch));
        }
        g.backward(loss);
      }
      Param* zp_tied[] = {&z_fwd};
      Param* zp_both[] = {&z_fwd, &z_bwd};
      std::vector<Param*> all = params;
      for (Param* zp : (cfg.tie_masks ? std::span<Param*>(zp_tied)
                                      : std::span<Param*>(zp_both))) {
        all.push_back(zp);
      }
      clip_global_norm(all, cfg.clip);
      opt.step(lr);
      if (update_z) {
        // regularizer subgradient enters after clipping, once per step
        auto step_z = [&](Param& z, std::vector<double>& vbuf) {
          auto pg = penalty_grad(cfg.reg, z.value.data);
          for (size_t i = 0; i < z.value.data.size(); ++i) {
            double g_total = z.grad.data[i] + cfg.reg.lambda0 * pg[i];
            vbuf[i] = cfg.momentum * vbuf[i] + g_total;
            z.value.data[i] -= lr * vbuf[i];
          }
          project_box(z.value.data);
        };
        step_z(z_fwd, vbuf_f);
        if (cfg.tie_masks) {
          z_bwd.value = z_fwd.value;
        } else {
          step_z(z_bwd, vbuf_b);
        }
      }
      sync_mask(emb.fwd.stack, z_fwd);
      sync_mask(emb.bwd.stack, z_bwd);
    }

    PruneStepLog log;
    log.step = epoch;
    log.penalty = penalty(cfg.reg, z_fwd.value.data) + penalty(cfg.reg, z_bwd.value.data);
    log.z_l0_fwd = l0_norm(z_fwd.value.data);
    log.z_l0_bwd = l0_norm(z_bwd.value.data);
    log.dev_f1 = evaluate_tagger(tagger, &emb, dev).f1;
    log.z_fwd = z_fwd.value.data;
    log.z_bwd = z_bwd.value.data;
    report.history.push_back(std::move(log));
  }

  uint64_t lm_sum_after = lm_weight_checksum(emb.fwd) ^ (lm_weight_checksum(emb.bwd) << 1);
  if (lm_sum_after != lm_sum_before) {
    throw std::logic_error("prune: LM weights changed during optimization");
  }

  report.binariness_gap =
      std::max(LayerMask{z_fwd.value.data}.binariness_gap(),
               LayerMask{z_bwd.value.data}.binariness_gap());
  report.binarized_cleanly = report.binariness_gap <= 0.1;
  report.rounded_fwd = round_mask(z_fwd);
  report.rounded_bwd = round_mask(z_bwd);

  emb = compress_embedder(emb, report.rounded_fwd, report.rounded_bwd);
  report.dev_f1_after = evaluate_tagger(tagger, &emb, dev).f1;
  report.flops_after = estimate_flops(&emb, &tagger, cfg.chars_per_word).total();
  return report;
}

std::string SelectionPattern::csv() const {
  std::ostringstream ss;
  ss << "direction,layer,kept,frequency\n";
  for (size_t l = 0; l < kept_fwd.size(); ++l) {
    ss << "fwd," << l << ',' << kept_fwd[l] << ','
       << static_cast<double>(kept_fwd[l]) / std::max(1, runs) << "\n";
  }
  for (size_t l = 0; l < kept_bwd.size(); ++l) {
    ss << "bwd," << l << ',' << kept_bwd[l] << ','
       << static_cast<double>(kept_bwd[l]) / std::max(1, runs) << "\n";
  }
  return ss.str();
}

SelectionPattern selection_pattern(
    int num_layers_fwd, int num_layers_bwd, const std::vector<uint64_t>& seeds,
    const std::function<std::pair<LayerMask, LayerMask>(uint64_t)>& runner) {
  SelectionPattern p;
  p.kept_fwd.assign(static_cast<size_t>(num_layers_fwd), 0);
  p.kept_bwd.assign(static_cast<size_t>(num_layers_bwd), 0);
  for (uint64_t seed : seeds) {
    auto [zf, zb] = runner(seed);
    for (size_t l = 0; l < zf.z.size(); ++l) {
      if (zf.z[l] > 0.5) ++p.kept_fwd[l];
    }
    for (size_t l = 0; l < zb.z.size(); ++l) {
      if (zb.z[l] > 0.5) ++p.kept_bwd[l];
    }
    ++p.runs;
  }
  return p;
}

}  // namespace denselm
