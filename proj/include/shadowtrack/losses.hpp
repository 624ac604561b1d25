// Copyright 2026 The ShadowTrack Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHADOWTRACK_LOSSES_HPP_
#define SHADOWTRACK_LOSSES_HPP_

// Training objectives for paired shadow/object tracking embeddings: center
// loss, contrast loss over the center similarity matrix, and the
// cycle-consistency loss over frame-to-frame transition matrices. Every loss
// returns its value together with the analytic gradient so the toy fitter
// can run plain gradient descent directly on embeddings.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace shadowtrack {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMajorMatrixX =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class PartKind { kShadow, kObject };

// Feature-map locations at or below this classification score are not part
// of an instance.
inline constexpr double kLocationScoreThreshold = 0.05;

inline constexpr int kDefaultEmbeddingDim = 16;
inline constexpr double kDefaultTransitionTemperature = 0.1;

template <typename Scalar = double>
struct LocationSample {
  VectorX<Scalar> embedding;
  Scalar class_score = Scalar(1);
  int instance_id = 0;
};

// Embeddings of one instance's qualifying locations, one per row.
template <typename Scalar = double>
struct InstanceGroup {
  int instance_id = 0;
  PartKind kind = PartKind::kObject;
  MatrixX<Scalar> samples;

  Eigen::Index size() const { return samples.rows(); }
  Eigen::Index dim() const { return samples.cols(); }
};

template <typename Scalar = double>
struct LossValue {
  Scalar value = Scalar(0);
  VectorX<Scalar> gradient;
};

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(int step)
      : std::runtime_error("loss became non-finite at step " +
                           std::to_string(step)),
        step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

namespace detail {

template <typename Scalar>
void write_row_major(const MatrixX<Scalar>& m, Eigen::Index offset,
                     VectorX<Scalar>& out) {
  Eigen::Map<RowMajorMatrixX<Scalar>>(out.data() + offset, m.rows(),
                                      m.cols()) = m;
}

template <typename Scalar>
MatrixX<Scalar> read_row_major(const VectorX<Scalar>& v, Eigen::Index offset,
                               Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const RowMajorMatrixX<Scalar>>(v.data() + offset, rows,
                                                   cols);
}

// Gradient of a row-wise softmax given its output and upstream gradient.
template <typename Scalar>
MatrixX<Scalar> softmax_backward(const MatrixX<Scalar>& probs,
                                 const MatrixX<Scalar>& grad_probs) {
  const VectorX<Scalar> dot = (grad_probs.array() * probs.array()).rowwise().sum();
  return (probs.array() * (grad_probs.colwise() - dot).array()).matrix();
}

template <typename Scalar>
VectorX<Scalar> row_norms(const MatrixX<Scalar>& m) {
  VectorX<Scalar> norms = m.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > Scalar(0))) {
      throw std::invalid_argument("zero-norm embedding in row " +
                                  std::to_string(i));
    }
  }
  return norms;
}

// Backpropagates through row normalization: x -> x / |x|.
template <typename Scalar>
MatrixX<Scalar> normalize_backward(const MatrixX<Scalar>& unit,
                                   const VectorX<Scalar>& norms,
                                   const MatrixX<Scalar>& grad_unit) {
  const VectorX<Scalar> radial =
      (grad_unit.array() * unit.array()).rowwise().sum();
  MatrixX<Scalar> out = grad_unit - unit.cwiseProduct(
                                        radial.replicate(1, unit.cols()));
  return norms.cwiseInverse().asDiagonal() * out;
}

// -sum_i log(m(i,i)) and its gradient -1/m(i,i) on the diagonal. Diagonals
// of stochastic matrices can exceed 1 by rounding; the log is capped at 0 so
// the loss stays non-negative.
template <typename Scalar>
Scalar identity_cross_entropy(const MatrixX<Scalar>& m,
                              MatrixX<Scalar>* grad) {
  Scalar loss = 0;
  if (grad) grad->setZero(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    loss -= std::log(std::min(m(i, i), Scalar(1)));
    if (grad) (*grad)(i, i) = Scalar(-1) / m(i, i);
  }
  return loss;
}

// Contrast term for one kind: value and gradient w.r.t. the centers that
// produced `sim`.
template <typename Scalar>
Scalar contrast_term(const MatrixX<Scalar>& sim, const MatrixX<Scalar>& centers,
                     MatrixX<Scalar>* grad_centers) {
  const Scalar loss = identity_cross_entropy<Scalar>(sim, nullptr);
  if (grad_centers) {
    MatrixX<Scalar> grad_logits = sim;
    grad_logits.diagonal().array() -= Scalar(1);
    *grad_centers = (grad_logits + grad_logits.transpose()) * centers;
  }
  return loss;
}

}  // namespace detail

// Keeps the samples of `instance_id` whose classification score exceeds the
// location threshold.
template <typename Scalar>
InstanceGroup<Scalar> make_instance_group(
    int instance_id, PartKind kind,
    std::span<const LocationSample<Scalar>> samples) {
  std::vector<const LocationSample<Scalar>*> kept;
  for (const auto& s : samples) {
    if (s.instance_id == instance_id &&
        s.class_score > Scalar(kLocationScoreThreshold)) {
      kept.push_back(&s);
    }
  }
  if (kept.empty()) {
    throw std::invalid_argument("instance " + std::to_string(instance_id) +
                                " has no location above the score threshold");
  }
  InstanceGroup<Scalar> group;
  group.instance_id = instance_id;
  group.kind = kind;
  group.samples.resize(static_cast<Eigen::Index>(kept.size()),
                       kept.front()->embedding.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i]->embedding.size() != group.samples.cols()) {
      throw std::invalid_argument("embedding dimension mismatch");
    }
    group.samples.row(static_cast<Eigen::Index>(i)) =
        kept[i]->embedding.transpose();
  }
  return group;
}

template <typename Scalar>
VectorX<Scalar> center_embedding(const InstanceGroup<Scalar>& group) {
  if (group.size() == 0) {
    throw std::invalid_argument("center of an empty instance group");
  }
  return group.samples.colwise().mean().transpose();
}

// Row-wise softmax with per-row max subtraction.
template <typename Derived>
MatrixX<typename Derived::Scalar> row_softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out = logits;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out.row(i).array() -= out.row(i).maxCoeff();
    out.row(i) = out.row(i).array().exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

// Pairwise cosine similarity between the rows of `a` and the rows of `b`.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> cosine_matrix(
    const Eigen::MatrixBase<DerivedA>& a,
    const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("embedding dimension mismatch");
  }
  const MatrixX<Scalar> am = a;
  const MatrixX<Scalar> bm = b;
  const VectorX<Scalar> na = detail::row_norms<Scalar>(am);
  const VectorX<Scalar> nb = detail::row_norms<Scalar>(bm);
  return na.cwiseInverse().asDiagonal() * (am * bm.transpose()) *
         nb.cwiseInverse().asDiagonal();
}

// Softmax over raw dot products between centers (one center per row),
// self term included.
template <typename Derived>
MatrixX<typename Derived::Scalar> similarity_matrix(
    const Eigen::MatrixBase<Derived>& centers) {
  if (centers.rows() < 1) {
    throw std::invalid_argument("similarity matrix needs at least one center");
  }
  return row_softmax(centers * centers.transpose());
}

// Transition probabilities from the instances at t (rows of `emb_t`) to the
// instances at t+1 (rows of `emb_t1`).
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> transition_matrix(
    const Eigen::MatrixBase<DerivedA>& emb_t,
    const Eigen::MatrixBase<DerivedB>& emb_t1,
    typename DerivedA::Scalar temperature = kDefaultTransitionTemperature) {
  if (emb_t.rows() < 1 || emb_t1.rows() < 1) {
    throw std::invalid_argument("transition matrix needs instances on both sides");
  }
  if (!(temperature > 0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  return row_softmax(cosine_matrix(emb_t, emb_t1) / temperature);
}

// Sum over instances of the L1 distance between each sample and its
// instance's center. The gradient covers every sample embedding, laid out
// group by group with each group's samples row-major, and includes the
// dependence of the center on the samples.
template <typename Scalar>
LossValue<Scalar> center_loss(std::span<const InstanceGroup<Scalar>> groups) {
  if (groups.empty()) throw std::invalid_argument("center loss of no groups");
  Eigen::Index total = 0;
  for (const auto& g : groups) {
    if (g.size() == 0) throw std::invalid_argument("empty instance group");
    total += g.samples.size();
  }
  LossValue<Scalar> out;
  out.gradient.setZero(total);
  Eigen::Index offset = 0;
  for (const auto& g : groups) {
    const VectorX<Scalar> center = center_embedding(g);
    const MatrixX<Scalar> diff =
        (-g.samples).rowwise() + center.transpose();
    out.value += diff.cwiseAbs().sum();
    // L1 subgradient at 0 is 0.
    const MatrixX<Scalar> sign = diff.unaryExpr([](Scalar v) {
      return v > 0 ? Scalar(1) : (v < 0 ? Scalar(-1) : Scalar(0));
    });
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean_sign =
        sign.colwise().sum() / static_cast<Scalar>(g.size());
    const MatrixX<Scalar> grad = (-sign).rowwise() + mean_sign;
    detail::write_row_major<Scalar>(grad, offset, out.gradient);
    offset += g.samples.size();
  }
  return out;
}

// Cross entropy of both similarity matrices against the identity. The
// gradient is taken w.r.t. the center matrices, laid out as the shadow
// centers row-major followed by the object centers row-major.
template <typename Scalar>
LossValue<Scalar> contrast_loss(const MatrixX<Scalar>& sim_s,
                                const MatrixX<Scalar>& sim_o,
                                const MatrixX<Scalar>& centers_s,
                                const MatrixX<Scalar>& centers_o) {
  if (sim_s.rows() != sim_s.cols() || sim_o.rows() != sim_o.cols()) {
    throw std::invalid_argument("similarity matrices must be square");
  }
  if (sim_s.rows() != centers_s.rows() || sim_o.rows() != centers_o.rows()) {
    throw std::invalid_argument("similarity size does not match center count");
  }
  MatrixX<Scalar> grad_s, grad_o;
  LossValue<Scalar> out;
  out.value = detail::contrast_term<Scalar>(sim_s, centers_s, &grad_s) +
              detail::contrast_term<Scalar>(sim_o, centers_o, &grad_o);
  out.gradient.resize(grad_s.size() + grad_o.size());
  detail::write_row_major<Scalar>(grad_s, 0, out.gradient);
  detail::write_row_major<Scalar>(grad_o, grad_s.size(), out.gradient);
  return out;
}

// Cross entropy of a_fwd * a_bwd against the identity. The gradient is
// w.r.t. both matrices: a_fwd row-major, then a_bwd row-major.
template <typename Scalar>
LossValue<Scalar> cycle_loss(const MatrixX<Scalar>& a_fwd,
                             const MatrixX<Scalar>& a_bwd) {
  if (a_fwd.rows() != a_bwd.cols() || a_fwd.cols() != a_bwd.rows()) {
    throw std::invalid_argument("cycle loss shape mismatch");
  }
  const MatrixX<Scalar> round_trip = a_fwd * a_bwd;
  MatrixX<Scalar> grad_trip;
  LossValue<Scalar> out;
  out.value = detail::identity_cross_entropy<Scalar>(round_trip, &grad_trip);
  const MatrixX<Scalar> grad_fwd = grad_trip * a_bwd.transpose();
  const MatrixX<Scalar> grad_bwd = a_fwd.transpose() * grad_trip;
  out.gradient.resize(grad_fwd.size() + grad_bwd.size());
  detail::write_row_major<Scalar>(grad_fwd, 0, out.gradient);
  detail::write_row_major<Scalar>(grad_bwd, grad_fwd.size(), out.gradient);
  return out;
}

// Cycle loss composed with the transition matrices built from paired
// embeddings. The gradient is w.r.t. emb_t row-major, then emb_t1 row-major.
template <typename Scalar>
LossValue<Scalar> cycle_loss_from_embeddings(
    const MatrixX<Scalar>& emb_t, const MatrixX<Scalar>& emb_t1,
    Scalar temperature = Scalar(kDefaultTransitionTemperature)) {
  if (emb_t.rows() < 1 || emb_t1.rows() < 1) {
    throw std::invalid_argument("cycle loss needs instances on both sides");
  }
  if (emb_t.cols() != emb_t1.cols()) {
    throw std::invalid_argument("embedding dimension mismatch");
  }
  if (!(temperature > 0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  const VectorX<Scalar> norm_t = detail::row_norms<Scalar>(emb_t);
  const VectorX<Scalar> norm_t1 = detail::row_norms<Scalar>(emb_t1);
  const MatrixX<Scalar> unit_t = norm_t.cwiseInverse().asDiagonal() * emb_t;
  const MatrixX<Scalar> unit_t1 = norm_t1.cwiseInverse().asDiagonal() * emb_t1;
  const MatrixX<Scalar> cos = unit_t * unit_t1.transpose();
  const MatrixX<Scalar> a_fwd = row_softmax(cos / temperature);
  const MatrixX<Scalar> a_bwd = row_softmax(cos.transpose() / temperature);

  LossValue<Scalar> inner = cycle_loss<Scalar>(a_fwd, a_bwd);
  const MatrixX<Scalar> grad_fwd = detail::read_row_major<Scalar>(
      inner.gradient, 0, a_fwd.rows(), a_fwd.cols());
  const MatrixX<Scalar> grad_bwd = detail::read_row_major<Scalar>(
      inner.gradient, a_fwd.size(), a_bwd.rows(), a_bwd.cols());
  const MatrixX<Scalar> grad_cos =
      (detail::softmax_backward<Scalar>(a_fwd, grad_fwd) +
       detail::softmax_backward<Scalar>(a_bwd, grad_bwd).transpose()) /
      temperature;
  const MatrixX<Scalar> grad_t = detail::normalize_backward<Scalar>(
      unit_t, norm_t, grad_cos * unit_t1);
  const MatrixX<Scalar> grad_t1 = detail::normalize_backward<Scalar>(
      unit_t1, norm_t1, grad_cos.transpose() * unit_t);

  LossValue<Scalar> out;
  out.value = inner.value;
  out.gradient.resize(grad_t.size() + grad_t1.size());
  detail::write_row_major<Scalar>(grad_t, 0, out.gradient);
  detail::write_row_major<Scalar>(grad_t1, grad_t.size(), out.gradient);
  return out;
}

// Largest relative disagreement between the analytic gradient returned by
// `loss` and central differences, |g - fd| / max(1, |g|).
template <typename Scalar, typename LossFn>
Scalar grad_check(LossFn&& loss, const VectorX<Scalar>& params, Scalar step) {
  if (!(step > 0)) throw std::invalid_argument("step must be positive");
  const LossValue<Scalar> at = loss(params);
  if (!std::isfinite(at.value)) {
    throw std::domain_error("loss is not finite at the check point");
  }
  if (at.gradient.size() != params.size()) {
    throw std::invalid_argument("gradient length does not match parameters");
  }
  Scalar worst = 0;
  VectorX<Scalar> probe = params;
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    probe(k) = params(k) + step;
    const Scalar up = loss(probe).value;
    probe(k) = params(k) - step;
    const Scalar down = loss(probe).value;
    probe(k) = params(k);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::domain_error("loss is not finite near the check point");
    }
    const Scalar numeric = (up - down) / (Scalar(2) * step);
    const Scalar analytic = at.gradient(k);
    worst = std::max(worst, std::abs(analytic - numeric) /
                                std::max(Scalar(1), std::abs(analytic)));
  }
  return worst;
}

// Instance groups observed in two adjacent frames. Instance ids link the
// frames; each instance may carry a shadow group, an object group, or both,
// but the set of kinds must be the same for every instance.
template <typename Scalar = double>
struct TwoFrameScenario {
  std::array<std::vector<InstanceGroup<Scalar>>, 2> frames;

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& frame : frames) {
      for (const auto& g : frame) n += g.samples.size();
    }
    return n;
  }

  VectorX<Scalar> flatten() const {
    VectorX<Scalar> out(parameter_count());
    Eigen::Index offset = 0;
    for (const auto& frame : frames) {
      for (const auto& g : frame) {
        detail::write_row_major<Scalar>(g.samples, offset, out);
        offset += g.samples.size();
      }
    }
    return out;
  }

  void assign(const VectorX<Scalar>& params) {
    if (params.size() != parameter_count()) {
      throw std::invalid_argument("parameter vector has the wrong length");
    }
    Eigen::Index offset = 0;
    for (auto& frame : frames) {
      for (auto& g : frame) {
        g.samples = detail::read_row_major<Scalar>(params, offset, g.size(),
                                                   g.dim());
        offset += g.samples.size();
      }
    }
  }
};

struct LossWeights {
  double center = 1.0;
  double contrast = 1.0;
  double cycle = 1.0;
};

template <typename Scalar>
struct ScenarioLoss {
  Scalar center = 0;
  Scalar contrast = 0;
  Scalar cycle = 0;
  LossValue<Scalar> total;
};

namespace detail {

// Per-frame layout: for each group, its offset into the flat parameters.
template <typename Scalar>
std::array<std::vector<Eigen::Index>, 2> group_offsets(
    const TwoFrameScenario<Scalar>& scenario) {
  std::array<std::vector<Eigen::Index>, 2> offsets;
  Eigen::Index offset = 0;
  for (std::size_t f = 0; f < 2; ++f) {
    for (const auto& g : scenario.frames[f]) {
      offsets[f].push_back(offset);
      offset += g.samples.size();
    }
  }
  return offsets;
}

// Adds d(loss)/d(center) to every sample of the group.
template <typename Scalar>
void spread_center_gradient(const InstanceGroup<Scalar>& g,
                            const VectorX<Scalar>& grad_center, Scalar weight,
                            Eigen::Index offset, VectorX<Scalar>& out) {
  const Scalar share = weight / static_cast<Scalar>(g.size());
  for (Eigen::Index r = 0; r < g.size(); ++r) {
    out.segment(offset + r * g.dim(), g.dim()) += share * grad_center;
  }
}

// Groups of one frame indexed by (instance id, kind), ordered by id.
template <typename Scalar>
std::map<int, std::array<int, 2>> index_instances(
    const std::vector<InstanceGroup<Scalar>>& frame) {
  std::map<int, std::array<int, 2>> out;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    auto [it, inserted] = out.try_emplace(frame[i].instance_id,
                                          std::array<int, 2>{-1, -1});
    int& slot = it->second[frame[i].kind == PartKind::kShadow ? 0 : 1];
    if (slot >= 0) {
      throw std::invalid_argument("duplicate group for instance " +
                                  std::to_string(frame[i].instance_id));
    }
    slot = static_cast<int>(i);
  }
  return out;
}

}  // namespace detail

// Weighted sum of center, contrast and cycle losses over a two-frame
// scenario, with the gradient w.r.t. TwoFrameScenario::flatten().
// The contrast term is taken per frame and per kind; the cycle term uses
// paired embeddings (shadow center then object center) and runs in both
// temporal directions.
template <typename Scalar>
ScenarioLoss<Scalar> scenario_loss(const TwoFrameScenario<Scalar>& scenario,
                                   const LossWeights& weights,
                                   Scalar temperature) {
  ScenarioLoss<Scalar> out;
  out.total.gradient.setZero(scenario.parameter_count());
  const auto offsets = detail::group_offsets(scenario);

  std::vector<InstanceGroup<Scalar>> all;
  for (const auto& frame : scenario.frames) {
    all.insert(all.end(), frame.begin(), frame.end());
  }
  if (all.empty()) throw std::invalid_argument("scenario has no groups");

  if (weights.center != 0.0) {
    const auto c = center_loss<Scalar>(all);
    out.center = c.value;
    out.total.gradient += Scalar(weights.center) * c.gradient;
  }

  std::array<std::map<int, std::array<int, 2>>, 2> index;
  std::array<std::vector<VectorX<Scalar>>, 2> centers;
  for (std::size_t f = 0; f < 2; ++f) {
    index[f] = detail::index_instances(scenario.frames[f]);
    for (const auto& g : scenario.frames[f]) {
      centers[f].push_back(center_embedding(g));
    }
  }

  if (weights.contrast != 0.0) {
    for (std::size_t f = 0; f < 2; ++f) {
      for (int kind = 0; kind < 2; ++kind) {
        std::vector<int> members;
        for (const auto& [id, slots] : index[f]) {
          if (slots[kind] >= 0) members.push_back(slots[kind]);
        }
        if (members.empty()) continue;
        const Eigen::Index dim = scenario.frames[f][members[0]].dim();
        MatrixX<Scalar> c(static_cast<Eigen::Index>(members.size()), dim);
        for (std::size_t k = 0; k < members.size(); ++k) {
          c.row(static_cast<Eigen::Index>(k)) =
              centers[f][members[k]].transpose();
        }
        MatrixX<Scalar> grad_c;
        out.contrast +=
            detail::contrast_term<Scalar>(similarity_matrix(c), c, &grad_c);
        for (std::size_t k = 0; k < members.size(); ++k) {
          detail::spread_center_gradient<Scalar>(
              scenario.frames[f][members[k]],
              grad_c.row(static_cast<Eigen::Index>(k)).transpose(),
              Scalar(weights.contrast), offsets[f][members[k]],
              out.total.gradient);
        }
      }
    }
  }

  if (weights.cycle != 0.0) {
    std::array<MatrixX<Scalar>, 2> paired;
    std::array<std::vector<std::array<int, 2>>, 2> layout;
    std::array<bool, 2> kinds{false, false};
    bool first = true;
    for (std::size_t f = 0; f < 2; ++f) {
      for (const auto& [id, slots] : index[f]) {
        const std::array<bool, 2> has{slots[0] >= 0, slots[1] >= 0};
        if (first) {
          kinds = has;
          first = false;
        } else if (has != kinds) {
          throw std::invalid_argument(
              "every instance must carry the same set of parts");
        }
        layout[f].push_back(slots);
      }
    }
    for (std::size_t f = 0; f < 2; ++f) {
      if (layout[f].empty()) {
        throw std::invalid_argument("cycle loss needs instances in both frames");
      }
      Eigen::Index width = 0;
      for (int s : layout[f].front()) {
        if (s >= 0) width += scenario.frames[f][s].dim();
      }
      paired[f].resize(static_cast<Eigen::Index>(layout[f].size()), width);
      for (std::size_t k = 0; k < layout[f].size(); ++k) {
        Eigen::Index col = 0;
        for (int s : layout[f][k]) {
          if (s < 0) continue;
          const auto& c = centers[f][s];
          paired[f].row(static_cast<Eigen::Index>(k)).segment(col, c.size()) =
              c.transpose();
          col += c.size();
        }
      }
    }
    const auto fwd = cycle_loss_from_embeddings<Scalar>(paired[0], paired[1],
                                                        temperature);
    const auto bwd = cycle_loss_from_embeddings<Scalar>(paired[1], paired[0],
                                                        temperature);
    out.cycle = fwd.value + bwd.value;
    std::array<MatrixX<Scalar>, 2> grad;
    grad[0] = detail::read_row_major<Scalar>(fwd.gradient, 0, paired[0].rows(),
                                             paired[0].cols()) +
              detail::read_row_major<Scalar>(bwd.gradient, paired[1].size(),
                                             paired[0].rows(),
                                             paired[0].cols());
    grad[1] = detail::read_row_major<Scalar>(fwd.gradient, paired[0].size(),
                                             paired[1].rows(),
                                             paired[1].cols()) +
              detail::read_row_major<Scalar>(bwd.gradient, 0, paired[1].rows(),
                                             paired[1].cols());
    for (std::size_t f = 0; f < 2; ++f) {
      for (std::size_t k = 0; k < layout[f].size(); ++k) {
        Eigen::Index col = 0;
        for (int s : layout[f][k]) {
          if (s < 0) continue;
          const auto& g = scenario.frames[f][s];
          detail::spread_center_gradient<Scalar>(
              g,
              grad[f].row(static_cast<Eigen::Index>(k))
                  .segment(col, g.dim())
                  .transpose(),
              Scalar(weights.cycle), offsets[f][s], out.total.gradient);
          col += g.dim();
        }
      }
    }
  }

  out.total.value = Scalar(weights.center) * out.center +
                    Scalar(weights.contrast) * out.contrast +
                    Scalar(weights.cycle) * out.cycle;
  return out;
}

struct FitOptions {
  int steps = 2000;
  double learning_rate = 0.01;
  LossWeights weights;
  double temperature = kDefaultTransitionTemperature;
};

template <typename Scalar = double>
struct FitResult {
  TwoFrameScenario<Scalar> scenario;
  // loss_trace[k] is the total loss after k updates.
  std::vector<Scalar> loss_trace;
};

// Plain gradient descent on the sample embeddings themselves.
template <typename Scalar>
FitResult<Scalar> fit_toy(TwoFrameScenario<Scalar> scenario,
                          const FitOptions& options) {
  if (options.steps < 0) throw std::invalid_argument("negative step count");
  if (!(options.learning_rate > 0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  FitResult<Scalar> result;
  result.loss_trace.reserve(static_cast<std::size_t>(options.steps) + 1);
  VectorX<Scalar> params = scenario.flatten();
  const Scalar temperature(options.temperature);
  for (int step = 0;; ++step) {
    const auto loss = scenario_loss(scenario, options.weights, temperature);
    if (!std::isfinite(loss.total.value) || !loss.total.gradient.allFinite()) {
      throw DivergenceError(step);
    }
    result.loss_trace.push_back(loss.total.value);
    if (step == options.steps) break;
    params -= Scalar(options.learning_rate) * loss.total.gradient;
    scenario.assign(params);
  }
  result.scenario = std::move(scenario);
  return result;
}

template <typename Scalar>
struct EmbeddingSeparation {
  Scalar min_intra = std::numeric_limits<Scalar>::infinity();
  Scalar max_inter = -std::numeric_limits<Scalar>::infinity();
  Scalar margin() const { return min_intra - max_inter; }
};

// Cosine similarity between individual sample embeddings of the same kind
// across both frames: pairs sharing an instance id versus pairs that do not.
template <typename Scalar>
EmbeddingSeparation<Scalar> embedding_separation(
    const TwoFrameScenario<Scalar>& scenario) {
  EmbeddingSeparation<Scalar> out;
  for (PartKind kind : {PartKind::kShadow, PartKind::kObject}) {
    std::vector<int> ids;
    std::vector<VectorX<Scalar>> rows;
    for (const auto& frame : scenario.frames) {
      for (const auto& g : frame) {
        if (g.kind != kind) continue;
        for (Eigen::Index r = 0; r < g.size(); ++r) {
          ids.push_back(g.instance_id);
          rows.push_back(g.samples.row(r).transpose().normalized());
        }
      }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = i + 1; j < rows.size(); ++j) {
        const Scalar c = rows[i].dot(rows[j]);
        if (ids[i] == ids[j]) {
          out.min_intra = std::min(out.min_intra, c);
        } else {
          out.max_inter = std::max(out.max_inter, c);
        }
      }
    }
  }
  return out;
}

}  // namespace shadowtrack

#endif  // SHADOWTRACK_LOSSES_HPP_
