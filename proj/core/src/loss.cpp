#include "crystclr/loss.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "crystclr/errors.hpp"

namespace crystclr {

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw InvariantError("loss.tau must be > 0");
  if (cs_weight != 1.0) throw InvariantError("loss.cs_weight is fixed at 1.0");
}

double cosine_sim(const Eigen::Ref<const Eigen::VectorXd>& u,
                  const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw NumericalError("cosine similarity of a zero-norm vector");
  return u.dot(v) / (nu * nv);
}

namespace {

void check_pairs(const Eigen::Ref<const Eigen::MatrixXd>& z) {
  if (z.rows() < 2 || z.rows() % 2 != 0) {
    throw ShapeError("contrastive batch needs an even, non-zero number of rows (got " +
                     std::to_string(z.rows()) + ")");
  }
}

void check_nonzero_rows(const Eigen::Ref<const Eigen::MatrixXd>& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    if (z.row(i).norm() == 0.0) {
      throw NumericalError("projection row " + std::to_string(i) + " has zero norm");
    }
  }
}

// Row-normalised copy of z with norms clamped at kNormFloor.
struct Normalized {
  Eigen::MatrixXd unit;
  Eigen::VectorXd norms;
};

Normalized normalize_rows(const Eigen::Ref<const Eigen::MatrixXd>& z) {
  Normalized out{z, Eigen::VectorXd(z.rows())};
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double n = std::max(z.row(i).norm(), kNormFloor);
    out.norms[i] = n;
    out.unit.row(i) /= n;
  }
  return out;
}

// Per-anchor log-softmax over k != i of logits(i, k).
struct Softmax {
  Eigen::MatrixXd log_prob;  // diagonal entries are -inf
  Eigen::MatrixXd prob;      // diagonal entries are 0
};

Softmax masked_softmax(const Eigen::MatrixXd& logits) {
  const Eigen::Index n = logits.rows();
  Softmax out{Eigen::MatrixXd(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i) mx = std::max(mx, logits(i, k));
    }
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i) sum += std::exp(logits(i, k) - mx);
    }
    const double log_denominator = mx + std::log(sum);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == i) {
        out.log_prob(i, k) = -std::numeric_limits<double>::infinity();
      } else {
        out.log_prob(i, k) = logits(i, k) - log_denominator;
        out.prob(i, k) = std::exp(out.log_prob(i, k));
      }
    }
  }
  return out;
}

struct Terms {
  double nt_xent = 0.0;
  double cs = 0.0;
  int cs_skipped = 0;
  Eigen::MatrixXd grad_nt;  // d nt_xent / d logits
  Eigen::MatrixXd grad_cs;  // d cs / d logits
};

Terms evaluate(const Eigen::MatrixXd& logits, const PositiveSets* positives, bool want_grad) {
  const Eigen::Index n = logits.rows();
  const Softmax sm = masked_softmax(logits);
  Terms t;
  if (want_grad) {
    t.grad_nt = Eigen::MatrixXd::Zero(n, n);
    t.grad_cs = Eigen::MatrixXd::Zero(n, n);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index p = partner_of(static_cast<int>(i));
    t.nt_xent -= sm.log_prob(i, p) * inv_n;
    if (want_grad) {
      t.grad_nt.row(i) = sm.prob.row(i) * inv_n;
      t.grad_nt(i, p) -= inv_n;
    }
  }
  if (!positives) return t;

  if (static_cast<Eigen::Index>(positives->size()) != n) {
    throw ShapeError("positive sets cover " + std::to_string(positives->size()) +
                     " positions, batch has " + std::to_string(n));
  }
  int used = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pos = (*positives)[static_cast<std::size_t>(i)];
    for (int j : pos) {
      if (j < 0 || j >= n || j == i) {
        throw ShapeError("P(" + std::to_string(i) + ") holds invalid position " + std::to_string(j));
      }
    }
    if (pos.empty()) {
      ++t.cs_skipped;
      continue;
    }
    ++used;
  }
  if (used == 0) throw NumericalError("composition-similarity loss: every P(i) is empty");
  const double inv_used = 1.0 / used;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pos = (*positives)[static_cast<std::size_t>(i)];
    if (pos.empty()) continue;
    // log( mean_{j in P} prob(i, j) ) via log-sum-exp.
    double mx = -std::numeric_limits<double>::infinity();
    for (int j : pos) mx = std::max(mx, sm.log_prob(i, j));
    double sum = 0.0;
    for (int j : pos) sum += std::exp(sm.log_prob(i, j) - mx);
    const double log_mean = mx + std::log(sum) - std::log(static_cast<double>(pos.size()));
    t.cs -= log_mean * inv_used;
    if (want_grad) {
      t.grad_cs.row(i) = sm.prob.row(i) * inv_used;
      for (int j : pos) t.grad_cs(i, j) -= std::exp(sm.log_prob(i, j) - mx) / sum * inv_used;
    }
  }
  return t;
}

Eigen::MatrixXd logits_of(const Eigen::MatrixXd& unit, double tau) {
  return unit * unit.transpose() / tau;
}

}  // namespace

double nt_xent(const Eigen::Ref<const Eigen::MatrixXd>& z, double tau) {
  check_pairs(z);
  check_nonzero_rows(z);
  const Normalized nz = normalize_rows(z);
  return evaluate(logits_of(nz.unit, tau), nullptr, false).nt_xent;
}

PositiveSets positive_sets(std::span<const CompositionVector> comps) {
  const auto n = static_cast<int>(comps.size());
  PositiveSets sets(comps.size());
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < n; ++p) {
      if (p != i && comps[static_cast<std::size_t>(i)].dot(comps[static_cast<std::size_t>(p)]) > 0) {
        sets[static_cast<std::size_t>(i)].push_back(p);
      }
    }
  }
  return sets;
}

double cs_loss(const Eigen::Ref<const Eigen::MatrixXd>& z, const PositiveSets& positives,
               double tau) {
  check_pairs(z);
  check_nonzero_rows(z);
  const Normalized nz = normalize_rows(z);
  return evaluate(logits_of(nz.unit, tau), &positives, false).cs;
}

double combined_loss(const Eigen::Ref<const Eigen::MatrixXd>& z, const PositiveSets& positives,
                     const LossConfig& cfg) {
  check_pairs(z);
  check_nonzero_rows(z);
  const Normalized nz = normalize_rows(z);
  const Terms t = evaluate(logits_of(nz.unit, cfg.tau), cfg.use_cs ? &positives : nullptr, false);
  return t.nt_xent + (cfg.use_cs ? cfg.cs_weight * t.cs : 0.0);
}

LossTerms combined_loss_and_grad(const Eigen::Ref<const Eigen::MatrixXd>& z,
                                 const PositiveSets& positives, const LossConfig& cfg) {
  check_pairs(z);
  const Normalized nz = normalize_rows(z);
  const Terms t = evaluate(logits_of(nz.unit, cfg.tau), cfg.use_cs ? &positives : nullptr, true);

  LossTerms out;
  out.nt_xent = t.nt_xent;
  out.cs = t.cs;
  out.cs_skipped = t.cs_skipped;
  out.total = t.nt_xent + (cfg.use_cs ? cfg.cs_weight * t.cs : 0.0);
  if (!std::isfinite(out.total)) {
    throw NumericalError(std::string("non-finite contrastive loss (") +
                         (std::isfinite(t.nt_xent) ? "composition-similarity" : "NT-Xent") +
                         " term)");
  }

  Eigen::MatrixXd d_logits = t.grad_nt;
  if (cfg.use_cs) d_logits += cfg.cs_weight * t.grad_cs;
  // logits = U U^T / tau, so dU = (G + G^T) U / tau.
  const Eigen::MatrixXd d_unit = (d_logits + d_logits.transpose()) * nz.unit / cfg.tau;
  out.grad.resize(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double n = nz.norms[i];
    if (z.row(i).norm() < kNormFloor) {
      out.grad.row(i) = d_unit.row(i) / n;
    } else {
      const double radial = nz.unit.row(i).dot(d_unit.row(i));
      out.grad.row(i) = (d_unit.row(i) - radial * nz.unit.row(i)) / n;
    }
  }
  return out;
}

}  // namespace crystclr
