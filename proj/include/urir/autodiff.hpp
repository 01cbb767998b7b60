#pragma once
// Reverse-mode autodiff over a flat tape of eagerly evaluated nodes.
// Ops append nodes in topological order; backward() runs the closures in
// reverse and flushes leaf gradients into the owning Tensor's grad buffer.
//
// A Tape built with track_grads=false records values only (used for
// frozen-parameter evaluation); backward() on such a tape is a StateError.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "urir/errors.hpp"
#include "urir/tensor.hpp"

namespace urir {

class Tape {
public:
    using Var = int32_t;
    static constexpr Var kNone = -1;

    explicit Tape(bool track_grads = true) : track_grads_(track_grads) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool tracks_grads() const { return track_grads_; }
    size_t size() const { return nodes_.size(); }

    std::span<const double> val(Var v) const { return node(v).val; }

    double scalar(Var v) const {
        const Node& n = node(v);
        if (n.val.size() != 1) {
            throw DimensionError("scalar: var has " + std::to_string(n.val.size()) + " entries");
        }
        return n.val[0];
    }

    std::vector<double> values(Var v) const {
        auto s = val(v);
        return {s.begin(), s.end()};
    }

    // ---- leaves -----------------------------------------------------------

    Var value(std::vector<double> v) {
        Node n;
        n.rows = static_cast<int>(v.size());
        n.val = std::move(v);
        return push(std::move(n));
    }

    Var zeros(int len) { return value(std::vector<double>(static_cast<size_t>(len), 0.0)); }

    Var value_matrix(std::vector<double> v, int rows, int cols) {
        if (static_cast<int64_t>(v.size()) != static_cast<int64_t>(rows) * cols) {
            throw DimensionError("value_matrix: " + std::to_string(v.size()) + " entries for [" +
                                 std::to_string(rows) + "x" + std::to_string(cols) + "]");
        }
        Node n;
        n.rows = rows;
        n.cols = cols;
        n.val = std::move(v);
        return push(std::move(n));
    }

    // Whole-tensor parameter leaf; gradient flushes into t.grad.
    Var leaf(Tensor& t) {
        Node n;
        n.rows = t.rows();
        n.cols = t.cols();
        n.val = t.values;
        n.sink = &t;
        n.sink_offset = 0;
        return push(std::move(n));
    }

    // One row of a 2-D embedding table as a length-d leaf.
    Var leaf_row(Tensor& t, int row) {
        const int d = t.cols();
        if (row < 0 || row >= t.rows()) {
            throw IndexError("leaf_row: row " + std::to_string(row) + " out of range [0," +
                             std::to_string(t.rows()) + ")");
        }
        Node n;
        n.rows = d;
        n.val.assign(t.values.begin() + static_cast<int64_t>(row) * d,
                     t.values.begin() + static_cast<int64_t>(row + 1) * d);
        n.sink = &t;
        n.sink_offset = static_cast<int64_t>(row) * d;
        return push(std::move(n));
    }

    // ---- ops --------------------------------------------------------------

    // y = W x + b (b may be kNone). W is a rows x cols leaf; x, b vectors.
    Var affine(Var w, Var x, Var b) {
        const Node& wn = node(w);
        const Node& xn = node(x);
        const int m = wn.rows, k = wn.cols;
        require_vec(x, "affine x");
        if (static_cast<int>(xn.val.size()) != k) {
            throw DimensionError("affine: W is " + shape_str(w) + " but x is " + shape_str(x));
        }
        if (b != kNone && static_cast<int>(node(b).val.size()) != m) {
            throw DimensionError("affine: W is " + shape_str(w) + " but b is " + shape_str(b));
        }
        Node n;
        n.rows = m;
        n.val.assign(static_cast<size_t>(m), 0.0);
        for (int i = 0; i < m; ++i) {
            double acc = b != kNone ? node(b).val[static_cast<size_t>(i)] : 0.0;
            const double* wr = wn.val.data() + static_cast<int64_t>(i) * k;
            for (int j = 0; j < k; ++j) acc += wr[j] * xn.val[static_cast<size_t>(j)];
            n.val[static_cast<size_t>(i)] = acc;
        }
        if (track_grads_) {
            n.back = [w, x, b, m, k](Tape& t, const Node& out) {
                Node& wn2 = t.nodes_[static_cast<size_t>(w)];
                Node& xn2 = t.nodes_[static_cast<size_t>(x)];
                for (int i = 0; i < m; ++i) {
                    const double g = out.grad[static_cast<size_t>(i)];
                    if (b != Tape::kNone) t.nodes_[static_cast<size_t>(b)].grad[static_cast<size_t>(i)] += g;
                    double* wg = wn2.grad.data() + static_cast<int64_t>(i) * k;
                    const double* wv = wn2.val.data() + static_cast<int64_t>(i) * k;
                    for (int j = 0; j < k; ++j) {
                        wg[j] += g * xn2.val[static_cast<size_t>(j)];
                        xn2.grad[static_cast<size_t>(j)] += g * wv[j];
                    }
                }
            };
        }
        return push(std::move(n));
    }

    Var matvec(Var w, Var x) { return affine(w, x, kNone); }

    Var relu(Var x) {
        const Node& xn = node(x);
        Node n;
        n.rows = xn.rows;
        n.val.resize(xn.val.size());
        // NaN propagates instead of clamping to 0, so corrupt state
        // surfaces at the loss check rather than being laundered
        for (size_t i = 0; i < xn.val.size(); ++i) {
            const double v = xn.val[i];
            n.val[i] = v > 0.0 ? v : (std::isnan(v) ? v : 0.0);
        }
        if (track_grads_) {
            n.back = [x](Tape& t, const Node& out) {
                Node& xn2 = t.nodes_[static_cast<size_t>(x)];
                for (size_t i = 0; i < out.grad.size(); ++i) {
                    if (xn2.val[i] > 0.0) xn2.grad[i] += out.grad[i];
                }
            };
        }
        return push(std::move(n));
    }

    Var concat3(Var a, Var b, Var c) {
        require_vec(a, "concat3 a");
        require_vec(b, "concat3 b");
        require_vec(c, "concat3 c");
        const Node &an = node(a), &bn = node(b), &cn = node(c);
        Node n;
        n.rows = static_cast<int>(an.val.size() + bn.val.size() + cn.val.size());
        n.val.reserve(static_cast<size_t>(n.rows));
        n.val.insert(n.val.end(), an.val.begin(), an.val.end());
        n.val.insert(n.val.end(), bn.val.begin(), bn.val.end());
        n.val.insert(n.val.end(), cn.val.begin(), cn.val.end());
        if (track_grads_) {
            const size_t la = an.val.size(), lb = bn.val.size(), lc = cn.val.size();
            n.back = [a, b, c, la, lb, lc](Tape& t, const Node& out) {
                Node& an2 = t.nodes_[static_cast<size_t>(a)];
                Node& bn2 = t.nodes_[static_cast<size_t>(b)];
                Node& cn2 = t.nodes_[static_cast<size_t>(c)];
                for (size_t i = 0; i < la; ++i) an2.grad[i] += out.grad[i];
                for (size_t i = 0; i < lb; ++i) bn2.grad[i] += out.grad[la + i];
                for (size_t i = 0; i < lc; ++i) cn2.grad[i] += out.grad[la + lb + i];
            };
        }
        return push(std::move(n));
    }

    // Gathers scalar vars into one vector var.
    Var pack_scalars(const std::vector<Var>& xs) {
        if (xs.empty()) throw DimensionError("pack_scalars: empty input");
        Node n;
        n.rows = static_cast<int>(xs.size());
        n.val.resize(xs.size());
        for (size_t i = 0; i < xs.size(); ++i) n.val[i] = scalar(xs[i]);
        if (track_grads_) {
            n.back = [xs](Tape& t, const Node& out) {
                for (size_t i = 0; i < xs.size(); ++i) {
                    t.nodes_[static_cast<size_t>(xs[i])].grad[0] += out.grad[i];
                }
            };
        }
        return push(std::move(n));
    }

    // Numerically stable softmax (max subtraction).
    Var softmax(Var x) {
        require_vec(x, "softmax x");
        const Node& xn = node(x);
        if (xn.val.empty()) throw DimensionError("softmax: empty input");
        Node n;
        n.rows = xn.rows;
        n.val.resize(xn.val.size());
        double mx = xn.val[0];
        for (double v : xn.val) mx = std::max(mx, v);
        double z = 0.0;
        for (size_t i = 0; i < xn.val.size(); ++i) {
            n.val[i] = std::exp(xn.val[i] - mx);
            z += n.val[i];
        }
        for (double& v : n.val) v /= z;
        if (track_grads_) {
            n.back = [x](Tape& t, const Node& out) {
                Node& xn2 = t.nodes_[static_cast<size_t>(x)];
                double dy_dot_y = 0.0;
                for (size_t i = 0; i < out.val.size(); ++i) dy_dot_y += out.grad[i] * out.val[i];
                for (size_t i = 0; i < out.val.size(); ++i) {
                    xn2.grad[i] += out.val[i] * (out.grad[i] - dy_dot_y);
                }
            };
        }
        return push(std::move(n));
    }

    Var dot(Var a, Var b) {
        require_vec(a, "dot a");
        require_vec(b, "dot b");
        const Node &an = node(a), &bn = node(b);
        if (an.val.size() != bn.val.size()) {
            throw DimensionError("dot: lengths " + shape_str(a) + " vs " + shape_str(b));
        }
        Node n;
        n.rows = 1;
        double acc = 0.0;
        for (size_t i = 0; i < an.val.size(); ++i) acc += an.val[i] * bn.val[i];
        n.val = {acc};
        if (track_grads_) {
            n.back = [a, b](Tape& t, const Node& out) {
                Node& an2 = t.nodes_[static_cast<size_t>(a)];
                Node& bn2 = t.nodes_[static_cast<size_t>(b)];
                const double g = out.grad[0];
                for (size_t i = 0; i < an2.val.size(); ++i) {
                    an2.grad[i] += g * bn2.val[i];
                    bn2.grad[i] += g * an2.val[i];
                }
            };
        }
        return push(std::move(n));
    }

    Var sigmoid(Var x) {
        const Node& xn = node(x);
        Node n;
        n.rows = xn.rows;
        n.val.resize(xn.val.size());
        for (size_t i = 0; i < xn.val.size(); ++i) n.val[i] = stable_sigmoid(xn.val[i]);
        if (track_grads_) {
            n.back = [x](Tape& t, const Node& out) {
                Node& xn2 = t.nodes_[static_cast<size_t>(x)];
                for (size_t i = 0; i < out.val.size(); ++i) {
                    xn2.grad[i] += out.grad[i] * out.val[i] * (1.0 - out.val[i]);
                }
            };
        }
        return push(std::move(n));
    }

    Var addn(const std::vector<Var>& xs) {
        if (xs.empty()) throw DimensionError("addn: empty input");
        const size_t len = node(xs[0]).val.size();
        for (Var v : xs) {
            if (node(v).val.size() != len) {
                throw DimensionError("addn: lengths " + shape_str(xs[0]) + " vs " + shape_str(v));
            }
        }
        Node n;
        n.rows = static_cast<int>(len);
        n.val.assign(len, 0.0);
        for (Var v : xs) {
            const Node& vn = node(v);
            for (size_t i = 0; i < len; ++i) n.val[i] += vn.val[i];
        }
        if (track_grads_) {
            n.back = [xs](Tape& t, const Node& out) {
                for (Var v : xs) {
                    Node& vn = t.nodes_[static_cast<size_t>(v)];
                    for (size_t i = 0; i < out.grad.size(); ++i) vn.grad[i] += out.grad[i];
                }
            };
        }
        return push(std::move(n));
    }

    Var add(Var a, Var b) { return addn({a, b}); }

    Var scale(Var x, double c) {
        const Node& xn = node(x);
        Node n;
        n.rows = xn.rows;
        n.val.resize(xn.val.size());
        for (size_t i = 0; i < xn.val.size(); ++i) n.val[i] = c * xn.val[i];
        if (track_grads_) {
            n.back = [x, c](Tape& t, const Node& out) {
                Node& xn2 = t.nodes_[static_cast<size_t>(x)];
                for (size_t i = 0; i < out.grad.size(); ++i) xn2.grad[i] += c * out.grad[i];
            };
        }
        return push(std::move(n));
    }

    // y[j] = sum_i w[i] * xs[i][j]
    Var weighted_sum(const std::vector<Var>& xs, Var w) {
        const Node& wn = node(w);
        if (wn.val.size() != xs.size()) {
            throw DimensionError("weighted_sum: " + std::to_string(xs.size()) + " vectors vs " +
                                 std::to_string(wn.val.size()) + " weights");
        }
        if (xs.empty()) throw DimensionError("weighted_sum: empty input");
        const size_t len = node(xs[0]).val.size();
        for (Var v : xs) {
            if (node(v).val.size() != len) {
                throw DimensionError("weighted_sum: lengths " + shape_str(xs[0]) + " vs " + shape_str(v));
            }
        }
        Node n;
        n.rows = static_cast<int>(len);
        n.val.assign(len, 0.0);
        for (size_t i = 0; i < xs.size(); ++i) {
            const Node& vn = node(xs[i]);
            const double wi = wn.val[i];
            for (size_t j = 0; j < len; ++j) n.val[j] += wi * vn.val[j];
        }
        if (track_grads_) {
            n.back = [xs, w](Tape& t, const Node& out) {
                Node& wn2 = t.nodes_[static_cast<size_t>(w)];
                for (size_t i = 0; i < xs.size(); ++i) {
                    Node& vn = t.nodes_[static_cast<size_t>(xs[i])];
                    const double wi = wn2.val[i];
                    double acc = 0.0;
                    for (size_t j = 0; j < out.grad.size(); ++j) {
                        vn.grad[j] += wi * out.grad[j];
                        acc += vn.val[j] * out.grad[j];
                    }
                    wn2.grad[i] += acc;
                }
            };
        }
        return push(std::move(n));
    }

    // Binary cross-entropy of a probability against a {0,1} label.
    // Log arguments are clamped at 1e-12; the gradient matches the clamp.
    Var bce(Var p, double label) {
        const double pv = scalar(p);
        Node n;
        n.rows = 1;
        const double cp = std::max(pv, kLogClamp);
        const double cq = std::max(1.0 - pv, kLogClamp);
        n.val = {-(label * std::log(cp) + (1.0 - label) * std::log(cq))};
        if (track_grads_) {
            n.back = [p, label](Tape& t, const Node& out) {
                Node& pn = t.nodes_[static_cast<size_t>(p)];
                const double pv2 = pn.val[0];
                double d = 0.0;
                if (pv2 > kLogClamp) d -= label / pv2;
                if (1.0 - pv2 > kLogClamp) d += (1.0 - label) / (1.0 - pv2);
                pn.grad[0] += out.grad[0] * d;
            };
        }
        return push(std::move(n));
    }

    Var mean(const std::vector<Var>& scalars) {
        if (scalars.empty()) throw DimensionError("mean: empty input");
        Node n;
        n.rows = 1;
        double acc = 0.0;
        for (Var v : scalars) acc += scalar(v);
        n.val = {acc / static_cast<double>(scalars.size())};
        if (track_grads_) {
            n.back = [scalars](Tape& t, const Node& out) {
                const double g = out.grad[0] / static_cast<double>(scalars.size());
                for (Var v : scalars) t.nodes_[static_cast<size_t>(v)].grad[0] += g;
            };
        }
        return push(std::move(n));
    }

    // ---- backward ----------------------------------------------------------

    void backward(Var loss) {
        if (!track_grads_) throw StateError("backward: tape does not track gradients");
        if (nodes_.empty()) throw StateError("backward called before any forward op");
        if (backward_done_) throw StateError("backward already run on this tape");
        if (loss < 0 || static_cast<size_t>(loss) >= nodes_.size()) {
            throw StateError("backward: invalid loss var");
        }
        if (nodes_[static_cast<size_t>(loss)].val.size() != 1) {
            throw DimensionError("backward: loss must be scalar");
        }
        backward_done_ = true;
        nodes_[static_cast<size_t>(loss)].grad[0] = 1.0;
        for (int32_t i = loss; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (n.back) n.back(*this, n);
        }
        // flush leaf gradients into their tensors
        for (Node& n : nodes_) {
            if (n.sink == nullptr) continue;
            n.sink->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i) {
                n.sink->grad[static_cast<size_t>(n.sink_offset) + i] += n.grad[i];
            }
        }
    }

    static double stable_sigmoid(double x) {
        if (x >= 0.0) {
            const double e = std::exp(-x);
            return 1.0 / (1.0 + e);
        }
        const double e = std::exp(x);
        return e / (1.0 + e);
    }

    static constexpr double kLogClamp = 1e-12;

private:
    struct Node {
        int rows = 0, cols = 1;
        std::vector<double> val;
        std::vector<double> grad;
        std::function<void(Tape&, const Node&)> back;
        Tensor* sink = nullptr;
        int64_t sink_offset = 0;
    };

    const Node& node(Var v) const {
        if (v < 0 || static_cast<size_t>(v) >= nodes_.size()) {
            throw StateError("invalid tape var " + std::to_string(v));
        }
        return nodes_[static_cast<size_t>(v)];
    }

    void require_vec(Var v, const char* what) const {
        if (node(v).cols != 1) {
            throw DimensionError(std::string(what) + ": expected a vector, got " + shape_str(v));
        }
    }

    std::string shape_str(Var v) const {
        const Node& n = node(v);
        if (n.cols == 1) return "[" + std::to_string(n.val.size()) + "]";
        return "[" + std::to_string(n.rows) + "x" + std::to_string(n.cols) + "]";
    }

    Var push(Node n) {
        if (track_grads_) n.grad.assign(n.val.size(), 0.0);
        nodes_.push_back(std::move(n));
        return static_cast<Var>(nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
    bool track_grads_ = true;
    bool backward_done_ = false;
};

using Var = Tape::Var;

} // namespace urir
