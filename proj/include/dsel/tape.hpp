#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "dsel/dual.hpp"
#include "dsel/errors.hpp"

namespace dsel {

// Reverse-mode tape over row-major matrices of scalar type S (double or Dual).
//
// Every op records its output node and a closure that pushes the output
// gradient back to its inputs. Instantiating with Dual and seeding the
// parameter tangents with v gives forward-over-reverse Hessian-vector products.
template <class S>
class Tape {
 public:
  using Scalar = S;

  struct Var {
    std::uint32_t id = 0;
  };

  Tape() { nodes_.reserve(64); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable leaf.
  Var input(std::vector<S> values, std::size_t rows, std::size_t cols) {
    return push(std::move(values), rows, cols, true);
  }

  Var constant(std::vector<S> values, std::size_t rows, std::size_t cols) {
    return push(std::move(values), rows, cols, false);
  }

  std::size_t rows(Var x) const { return nodes_[x.id].rows; }
  std::size_t cols(Var x) const { return nodes_[x.id].cols; }
  const std::vector<S>& value(Var x) const { return nodes_[x.id].value; }
  const std::vector<S>& grad(Var x) const { return nodes_[x.id].grad; }

  // a[n x k] * b[k x m]
  Var matmul(Var a, Var b) {
    const std::size_t n = rows(a), k = cols(a), m = cols(b);
    DSEL_REQUIRE(rows(b) == k, "matmul shape mismatch");
    std::vector<S> out(n * m, S(0.0));
    {
      const auto& av = value(a);
      const auto& bv = value(b);
      for (std::size_t i = 0; i < n; ++i) {
        S* orow = out.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const S aip = av[i * k + p];
          const S* brow = bv.data() + p * m;
          for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
        }
      }
    }
    Var c = push(std::move(out), n, m, needs(a) || needs(b));
    if (needs(c)) {
      record(c, [this, a, b, c, n, k, m] {
        const auto& gc = nodes_[c.id].grad;
        if (needs(a)) {
          auto& ga = nodes_[a.id].grad;
          const auto& bv = nodes_[b.id].value;
          for (std::size_t i = 0; i < n; ++i) {
            const S* grow = gc.data() + i * m;
            for (std::size_t p = 0; p < k; ++p) {
              const S* brow = bv.data() + p * m;
              S acc(0.0);
              for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
              ga[i * k + p] += acc;
            }
          }
        }
        if (needs(b)) {
          auto& gb = nodes_[b.id].grad;
          const auto& av = nodes_[a.id].value;
          for (std::size_t i = 0; i < n; ++i) {
            const S* grow = gc.data() + i * m;
            for (std::size_t p = 0; p < k; ++p) {
              const S aip = av[i * k + p];
              S* gbrow = gb.data() + p * m;
              for (std::size_t j = 0; j < m; ++j) gbrow[j] += aip * grow[j];
            }
          }
        }
      });
    }
    return c;
  }

  // x[n x m] + bias[1 x m] broadcast over rows.
  Var add_bias(Var x, Var bias) {
    const std::size_t n = rows(x), m = cols(x);
    DSEL_REQUIRE(rows(bias) * cols(bias) == m, "bias shape mismatch");
    std::vector<S> out = value(x);
    const auto& bv = value(bias);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] += bv[j];
    Var y = push(std::move(out), n, m, needs(x) || needs(bias));
    if (needs(y)) {
      record(y, [this, x, bias, y, n, m] {
        const auto& gy = nodes_[y.id].grad;
        if (needs(x)) {
          auto& gx = nodes_[x.id].grad;
          for (std::size_t i = 0; i < n * m; ++i) gx[i] += gy[i];
        }
        if (needs(bias)) {
          auto& gb = nodes_[bias.id].grad;
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) gb[j] += gy[i * m + j];
        }
      });
    }
    return y;
  }

  Var tanh(Var x) {
    using std::tanh;
    std::vector<S> out = value(x);
    for (S& v : out) v = tanh(v);
    Var y = push(std::move(out), rows(x), cols(x), needs(x));
    if (needs(y)) {
      record(y, [this, x, y] {
        const auto& yv = nodes_[y.id].value;
        const auto& gy = nodes_[y.id].grad;
        auto& gx = nodes_[x.id].grad;
        for (std::size_t i = 0; i < yv.size(); ++i) gx[i] += gy[i] * (S(1.0) - yv[i] * yv[i]);
      });
    }
    return y;
  }

  // bound * tanh(x / bound): smooth clamp into (-bound, bound).
  Var soft_clamp(Var x, double bound) {
    using std::tanh;
    DSEL_REQUIRE(bound > 0.0, "clamp bound must be positive");
    const double inv = 1.0 / bound;
    std::vector<S> out = value(x);
    for (S& v : out) v = S(bound) * tanh(v * S(inv));
    Var y = push(std::move(out), rows(x), cols(x), needs(x));
    if (needs(y)) {
      record(y, [this, x, y, inv] {
        const auto& yv = nodes_[y.id].value;
        const auto& gy = nodes_[y.id].grad;
        auto& gx = nodes_[x.id].grad;
        for (std::size_t i = 0; i < yv.size(); ++i) {
          const S t = yv[i] * S(inv);
          gx[i] += gy[i] * (S(1.0) - t * t);
        }
      });
    }
    return y;
  }

  // Row i is the concatenation of table rows idx[i*per_row .. i*per_row+per_row).
  Var embed_concat(Var table, std::span<const std::uint8_t> idx, std::size_t per_row) {
    const std::size_t d = cols(table), vocab = rows(table);
    DSEL_REQUIRE(per_row > 0 && idx.size() % per_row == 0, "embedding index count mismatch");
    const std::size_t n = idx.size() / per_row;
    std::vector<std::uint32_t> ids(idx.begin(), idx.end());
    for (auto i : ids) DSEL_REQUIRE(i < vocab, "embedding index out of range");
    std::vector<S> out(n * per_row * d);
    const auto& tv = value(table);
    for (std::size_t r = 0; r < ids.size(); ++r)
      std::copy_n(tv.begin() + ids[r] * d, d, out.begin() + r * d);
    Var y = push(std::move(out), n, per_row * d, needs(table));
    if (needs(y)) {
      record(y, [this, table, y, d, ids = std::move(ids)] {
        const auto& gy = nodes_[y.id].grad;
        auto& gt = nodes_[table.id].grad;
        for (std::size_t r = 0; r < ids.size(); ++r)
          for (std::size_t e = 0; e < d; ++e) gt[ids[r] * d + e] += gy[r * d + e];
      });
    }
    return y;
  }

  // Row i is the mean of table rows idx[i*per_row .. i*per_row+per_row).
  Var embed_mean(Var table, std::span<const std::uint8_t> idx, std::size_t per_row) {
    const std::size_t d = cols(table), vocab = rows(table);
    DSEL_REQUIRE(per_row > 0 && idx.size() % per_row == 0, "embedding index count mismatch");
    const std::size_t n = idx.size() / per_row;
    std::vector<std::uint32_t> ids(idx.begin(), idx.end());
    for (auto i : ids) DSEL_REQUIRE(i < vocab, "embedding index out of range");
    const S inv(1.0 / static_cast<double>(per_row));
    std::vector<S> out(n * d, S(0.0));
    const auto& tv = value(table);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < per_row; ++j)
        for (std::size_t e = 0; e < d; ++e) out[i * d + e] += tv[ids[i * per_row + j] * d + e];
    for (S& v : out) v *= inv;
    Var y = push(std::move(out), n, d, needs(table));
    if (needs(y)) {
      record(y, [this, table, y, d, per_row, inv, ids = std::move(ids)] {
        const auto& gy = nodes_[y.id].grad;
        auto& gt = nodes_[table.id].grad;
        for (std::size_t r = 0; r < ids.size(); ++r) {
          const std::size_t i = r / per_row;
          for (std::size_t e = 0; e < d; ++e) gt[ids[r] * d + e] += gy[i * d + e] * inv;
        }
      });
    }
    return y;
  }

  // Per-row negative log-likelihood of targets under softmax(logits). Output [n x 1].
  Var softmax_nll(Var logits, std::span<const int> targets) {
    using std::exp;
    using std::log;
    const std::size_t n = rows(logits), m = cols(logits);
    DSEL_REQUIRE(targets.size() == n, "target count mismatch");
    std::vector<S> probs(n * m);
    std::vector<S> out(n);
    const auto& z = value(logits);
    for (std::size_t i = 0; i < n; ++i) {
      DSEL_REQUIRE(targets[i] >= 0 && static_cast<std::size_t>(targets[i]) < m,
                   "class target out of range");
      const S* row = z.data() + i * m;
      double mx = primal(row[0]);
      for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, primal(row[j]));
      S total(0.0);
      for (std::size_t j = 0; j < m; ++j) {
        probs[i * m + j] = exp(row[j] - S(mx));
        total += probs[i * m + j];
      }
      const S inv = S(1.0) / total;
      for (std::size_t j = 0; j < m; ++j) probs[i * m + j] *= inv;
      out[i] = S(mx) + log(total) - row[targets[i]];
    }
    Var y = push(std::move(out), n, 1, needs(logits));
    if (needs(y)) {
      record(y, [this, logits, y, n, m, probs = std::move(probs),
                 t = std::vector<int>(targets.begin(), targets.end())] {
        const auto& gy = nodes_[y.id].grad;
        auto& gz = nodes_[logits.id].grad;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) gz[i * m + j] += gy[i] * probs[i * m + j];
          gz[i * m + t[i]] -= gy[i];
        }
      });
    }
    return y;
  }

  // 0.5 * (pred - target)^2 per row; pred is [n x 1].
  Var half_sq_error(Var pred, std::span<const double> targets) {
    const std::size_t n = rows(pred);
    DSEL_REQUIRE(cols(pred) == 1 && targets.size() == n, "regression target mismatch");
    std::vector<S> out(n);
    const auto& p = value(pred);
    for (std::size_t i = 0; i < n; ++i) {
      const S r = p[i] - S(targets[i]);
      out[i] = S(0.5) * r * r;
    }
    Var y = push(std::move(out), n, 1, needs(pred));
    if (needs(y)) {
      record(y, [this, pred, y, n, t = std::vector<double>(targets.begin(), targets.end())] {
        const auto& gy = nodes_[y.id].grad;
        const auto& p = nodes_[pred.id].value;
        auto& gp = nodes_[pred.id].grad;
        for (std::size_t i = 0; i < n; ++i) gp[i] += gy[i] * (p[i] - S(t[i]));
      });
    }
    return y;
  }

  // Binary cross-entropy with logits per row; labels in [0, 1].
  Var bce_with_logits(Var logits, std::span<const double> labels) {
    using std::exp;
    using std::log1p;
    const std::size_t n = rows(logits);
    DSEL_REQUIRE(cols(logits) == 1 && labels.size() == n, "label count mismatch");
    std::vector<S> out(n);
    std::vector<S> sig(n);
    const auto& z = value(logits);
    for (std::size_t i = 0; i < n; ++i) {
      const bool pos = primal(z[i]) >= 0.0;
      const S e = exp(pos ? -z[i] : z[i]);  // exp(-|z|)
      const S relu = pos ? z[i] : S(0.0);
      out[i] = relu - S(labels[i]) * z[i] + log1p(e);
      sig[i] = pos ? S(1.0) / (S(1.0) + e) : e / (S(1.0) + e);
    }
    Var y = push(std::move(out), n, 1, needs(logits));
    if (needs(y)) {
      record(y, [this, logits, y, n, sig = std::move(sig),
                 l = std::vector<double>(labels.begin(), labels.end())] {
        const auto& gy = nodes_[y.id].grad;
        auto& gz = nodes_[logits.id].grad;
        for (std::size_t i = 0; i < n; ++i) gz[i] += gy[i] * (sig[i] - S(l[i]));
      });
    }
    return y;
  }

  // 0.5 * (theta - center)^T A (theta - center); theta is [1 x p], A row-major p x p.
  Var quadratic_form(Var theta, std::span<const double> a, std::span<const double> center) {
    const std::size_t p = rows(theta) * cols(theta);
    DSEL_REQUIRE(a.size() == p * p && center.size() == p, "quadratic form shape mismatch");
    const auto& th = value(theta);
    std::vector<S> diff(p);
    for (std::size_t i = 0; i < p; ++i) diff[i] = th[i] - S(center[i]);
    // sym = 0.5 (A + A^T) diff
    std::vector<S> sym(p, S(0.0));
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j)
        sym[i] += S(0.5 * (a[i * p + j] + a[j * p + i])) * diff[j];
    S q(0.0);
    for (std::size_t i = 0; i < p; ++i) q += diff[i] * sym[i];
    Var y = push({S(0.5) * q}, 1, 1, needs(theta));
    if (needs(y)) {
      record(y, [this, theta, y, p, sym = std::move(sym)] {
        const S g = nodes_[y.id].grad[0];
        auto& gt = nodes_[theta.id].grad;
        for (std::size_t i = 0; i < p; ++i) gt[i] += g * sym[i];
      });
    }
    return y;
  }

  // Stack same-width blocks vertically.
  Var concat_rows(std::span<const Var> parts) {
    DSEL_REQUIRE(!parts.empty(), "concat of zero parts");
    const std::size_t m = cols(parts[0]);
    std::vector<S> out;
    std::size_t n = 0;
    bool any = false;
    for (Var p : parts) {
      DSEL_REQUIRE(cols(p) == m, "concat width mismatch");
      const auto& v = value(p);
      out.insert(out.end(), v.begin(), v.end());
      n += rows(p);
      any = any || needs(p);
    }
    Var y = push(std::move(out), n, m, any);
    if (needs(y)) {
      record(y, [this, y, ps = std::vector<Var>(parts.begin(), parts.end())] {
        const auto& gy = nodes_[y.id].grad;
        std::size_t off = 0;
        for (Var p : ps) {
          auto& gp = nodes_[p.id].grad;
          const std::size_t sz = nodes_[p.id].value.size();
          if (needs(p))
            for (std::size_t i = 0; i < sz; ++i) gp[i] += gy[off + i];
          off += sz;
        }
      });
    }
    return y;
  }

  // sum_i w_i x_i over all entries of x. Output [1 x 1].
  Var weighted_sum(Var x, std::span<const double> w) {
    const auto& xv = value(x);
    DSEL_REQUIRE(w.size() == xv.size(), "weight count mismatch");
    S acc(0.0);
    for (std::size_t i = 0; i < xv.size(); ++i) acc += S(w[i]) * xv[i];
    Var y = push({acc}, 1, 1, needs(x));
    if (needs(y)) {
      record(y, [this, x, y, ws = std::vector<double>(w.begin(), w.end())] {
        const S g = nodes_[y.id].grad[0];
        auto& gx = nodes_[x.id].grad;
        for (std::size_t i = 0; i < ws.size(); ++i) gx[i] += g * S(ws[i]);
      });
    }
    return y;
  }

  // Seeds d(root)/d(root) = 1 (root must be 1 x 1) and sweeps the tape backwards.
  void backward(Var root) {
    DSEL_REQUIRE(nodes_[root.id].value.size() == 1, "backward root must be scalar");
    if (!needs(root)) return;
    nodes_[root.id].grad[0] = S(1.0);
    for (std::size_t i = root.id + 1; i-- > 0;) {
      if (nodes_[i].backward) nodes_[i].backward();
    }
  }

 private:
  struct Node {
    std::vector<S> value;
    std::vector<S> grad;
    std::size_t rows = 0;
    std::size_t cols = 0;
    bool needs_grad = false;
    std::function<void()> backward;
  };

  bool needs(Var x) const { return nodes_[x.id].needs_grad; }

  Var push(std::vector<S> values, std::size_t rows, std::size_t cols, bool needs_grad) {
    DSEL_REQUIRE(values.size() == rows * cols, "node shape mismatch");
    Node node;
    node.rows = rows;
    node.cols = cols;
    node.needs_grad = needs_grad;
    if (needs_grad) node.grad.assign(values.size(), S(0.0));
    node.value = std::move(values);
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  template <class F>
  void record(Var y, F&& fn) {
    nodes_[y.id].backward = std::forward<F>(fn);
  }

  std::vector<Node> nodes_;
};

}  // namespace dsel
