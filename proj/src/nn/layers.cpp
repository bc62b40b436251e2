#include "rallypose/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "rallypose/error.hpp"

namespace rallypose::nn {

const std::array<std::pair<std::size_t, std::size_t>, 18> kCocoEdges{{
    {0, 1}, {0, 2}, {1, 3}, {2, 4}, {0, 5}, {0, 6}, {5, 6}, {5, 7}, {7, 9},
    {6, 8}, {8, 10}, {5, 11}, {6, 12}, {11, 12}, {11, 13}, {13, 15}, {12, 14}, {14, 16},
}};

SkeletonGraph SkeletonGraph::from_edges(std::size_t nodes, std::span<const std::pair<std::size_t, std::size_t>> edges) {
    SkeletonGraph g;
    g.adjacency = Matrix::Zero(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(nodes));
    for (const auto& [a, b] : edges) {
        if (a >= nodes || b >= nodes || a == b) {
            throw ShapeError("skeleton edge out of range");
        }
        g.adjacency(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 1.0;
        g.adjacency(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = 1.0;
    }
    Matrix with_self = g.adjacency + Matrix::Identity(g.adjacency.rows(), g.adjacency.cols());
    Eigen::VectorXd inv_sqrt_deg = with_self.rowwise().sum().array().rsqrt();
    g.normalized = inv_sqrt_deg.asDiagonal() * with_self * inv_sqrt_deg.asDiagonal();
    return g;
}

const SkeletonGraph& SkeletonGraph::coco() {
    static const SkeletonGraph g = from_edges(17, kCocoEdges);
    return g;
}

SkeletonGraph SkeletonGraph::isolated(std::size_t nodes) { return from_edges(nodes, {}); }

Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b) {
    if (w.rank() != 2 || x.rank() < 1 || x.shape().back() != w.dim(0)) {
        throw ShapeError("linear: input width " + shape_string(x.shape()) + " does not match weight " +
                         shape_string(w.shape()));
    }
    std::vector<std::size_t> shape = x.shape();
    shape.back() = w.dim(1);
    Tensor y(shape);
    y.rows().noalias() = x.rows() * w.rows();
    if (b) {
        expect_shape(*b, {w.dim(1)}, "linear bias");
        y.rows().rowwise() += b->rows().row(0);
    }
    return y;
}

Tensor linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dw, Tensor* db) {
    dw.rows().noalias() += x.rows().transpose() * dy.rows();
    if (db) {
        db->rows().row(0) += dy.rows().colwise().sum();
    }
    Tensor dx(x.shape());
    dx.rows().noalias() = dy.rows() * w.rows().transpose();
    return dx;
}

Tensor graph_conv(const Tensor& x, const Tensor& w, const Matrix& graph) {
    if (x.rank() != 3 || w.rank() != 2 || x.dim(2) != w.dim(0) ||
        static_cast<Eigen::Index>(x.dim(1)) != graph.rows()) {
        throw ShapeError("graph_conv: shapes " + shape_string(x.shape()) + " x " + shape_string(w.shape()) +
                         " do not conform to a " + std::to_string(graph.rows()) + "-node graph");
    }
    const std::size_t frames = x.dim(0);
    const auto joints = static_cast<Eigen::Index>(x.dim(1));
    const auto cout = static_cast<Eigen::Index>(w.dim(1));
    Matrix xw = x.rows() * w.rows();
    Tensor y({x.dim(0), x.dim(1), w.dim(1)});
    auto ym = y.rows();
    for (std::size_t t = 0; t < frames; ++t) {
        const auto r = static_cast<Eigen::Index>(t) * joints;
        ym.block(r, 0, joints, cout).noalias() = graph * xw.block(r, 0, joints, cout);
    }
    return y;
}

Tensor graph_conv_backward(const Tensor& x, const Tensor& w, const Matrix& graph, const Tensor& dy, Tensor& dw) {
    const std::size_t frames = x.dim(0);
    const auto joints = static_cast<Eigen::Index>(x.dim(1));
    const auto cout = static_cast<Eigen::Index>(w.dim(1));
    Matrix dxw(dy.rows().rows(), cout);
    auto dym = dy.rows();
    for (std::size_t t = 0; t < frames; ++t) {
        const auto r = static_cast<Eigen::Index>(t) * joints;
        dxw.block(r, 0, joints, cout).noalias() = graph.transpose() * dym.block(r, 0, joints, cout);
    }
    dw.rows().noalias() += x.rows().transpose() * dxw;
    Tensor dx(x.shape());
    dx.rows().noalias() = dxw * w.rows().transpose();
    return dx;
}

namespace {

void check_temporal(const Tensor& x, const Tensor& kernel) {
    if (kernel.rank() != 3 || kernel.dim(1) != kernel.dim(2)) {
        throw ShapeError("temporal_conv: kernel must be [k, C, C], got " + shape_string(kernel.shape()));
    }
    if (kernel.dim(0) % 2 == 0) {
        throw ConfigError("temporal_conv: kernel length must be odd, got " + std::to_string(kernel.dim(0)));
    }
    if (x.rank() != 3 || x.dim(2) != kernel.dim(1)) {
        throw ShapeError("temporal_conv: input " + shape_string(x.shape()) + " does not match kernel " +
                         shape_string(kernel.shape()));
    }
}

ConstMatrixMap kernel_tap(const Tensor& kernel, std::size_t u) {
    const auto c = static_cast<Eigen::Index>(kernel.dim(1));
    return ConstMatrixMap(kernel.data() + u * kernel.dim(1) * kernel.dim(2), c, c);
}

MatrixMap kernel_tap(Tensor& kernel, std::size_t u) {
    const auto c = static_cast<Eigen::Index>(kernel.dim(1));
    return MatrixMap(kernel.data() + u * kernel.dim(1) * kernel.dim(2), c, c);
}

// Row range [out_begin, out_begin + count) of y pairs with rows shifted by
// `offset` frames in x.
struct TapRange {
    Eigen::Index out_row;
    Eigen::Index in_row;
    Eigen::Index rows;
};

TapRange tap_range(std::size_t frames, std::size_t joints, long offset) {
    const long t0 = std::max<long>(0, -offset);
    const long t1 = std::min<long>(static_cast<long>(frames), static_cast<long>(frames) - offset);
    if (t1 <= t0) {
        return {0, 0, 0};
    }
    const auto j = static_cast<Eigen::Index>(joints);
    return {t0 * j, (t0 + offset) * j, (t1 - t0) * j};
}

} // namespace

Tensor temporal_conv(const Tensor& x, const Tensor& kernel) {
    check_temporal(x, kernel);
    const std::size_t k = kernel.dim(0);
    const long pad = static_cast<long>(k / 2);
    Tensor y(x.shape());
    auto ym = y.rows();
    auto xm = x.rows();
    for (std::size_t u = 0; u < k; ++u) {
        const TapRange r = tap_range(x.dim(0), x.dim(1), static_cast<long>(u) - pad);
        if (r.rows == 0) {
            continue;
        }
        ym.middleRows(r.out_row, r.rows).noalias() += xm.middleRows(r.in_row, r.rows) * kernel_tap(kernel, u);
    }
    return y;
}

Tensor temporal_conv_backward(const Tensor& x, const Tensor& kernel, const Tensor& dy, Tensor& dkernel) {
    check_temporal(x, kernel);
    const std::size_t k = kernel.dim(0);
    const long pad = static_cast<long>(k / 2);
    Tensor dx(x.shape());
    auto dxm = dx.rows();
    auto xm = x.rows();
    auto dym = dy.rows();
    for (std::size_t u = 0; u < k; ++u) {
        const TapRange r = tap_range(x.dim(0), x.dim(1), static_cast<long>(u) - pad);
        if (r.rows == 0) {
            continue;
        }
        kernel_tap(dkernel, u).noalias() += xm.middleRows(r.in_row, r.rows).transpose() * dym.middleRows(r.out_row, r.rows);
        dxm.middleRows(r.in_row, r.rows).noalias() += dym.middleRows(r.out_row, r.rows) * kernel_tap(kernel, u).transpose();
    }
    return dx;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, LayerNormCache* cache) {
    const std::size_t width = x.shape().back();
    expect_shape(gamma, {width}, "layer_norm gamma");
    expect_shape(beta, {width}, "layer_norm beta");
    Tensor y(x.shape());
    auto xm = x.rows();
    auto ym = y.rows();
    Tensor xhat(x.shape());
    auto hm = xhat.rows();
    std::vector<double> rstd(static_cast<std::size_t>(xm.rows()));
    const auto g = gamma.rows().row(0);
    const auto b = beta.rows().row(0);
    for (Eigen::Index r = 0; r < xm.rows(); ++r) {
        const double mean = xm.row(r).mean();
        const double var = (xm.row(r).array() - mean).square().mean();
        const double rs = 1.0 / std::sqrt(var + kLayerNormEps);
        rstd[static_cast<std::size_t>(r)] = rs;
        hm.row(r) = (xm.row(r).array() - mean) * rs;
        ym.row(r) = hm.row(r).array() * g.array() + b.array();
    }
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->rstd = std::move(rstd);
    }
    return y;
}

Tensor layer_norm_backward(const LayerNormCache& cache, const Tensor& gamma, const Tensor& dy, Tensor& dgamma,
                           Tensor& dbeta) {
    auto hm = cache.xhat.rows();
    auto dym = dy.rows();
    dgamma.rows().row(0) += (dym.array() * hm.array()).colwise().sum().matrix();
    dbeta.rows().row(0) += dym.colwise().sum();
    Tensor dx(dy.shape());
    auto dxm = dx.rows();
    const auto g = gamma.rows().row(0);
    const double n = static_cast<double>(hm.cols());
    for (Eigen::Index r = 0; r < hm.rows(); ++r) {
        const Eigen::RowVectorXd dh = dym.row(r).array() * g.array();
        const double mean_dh = dh.mean();
        const double mean_dh_h = dh.dot(hm.row(r)) / n;
        dxm.row(r) = cache.rstd[static_cast<std::size_t>(r)] *
                     (dh.array() - mean_dh - hm.row(r).array() * mean_dh_h);
    }
    return dx;
}

Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = x[i] > 0.0 ? x[i] : 0.0;
    }
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
    Tensor dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
    }
    return dx;
}

Tensor softmax_rows(const Tensor& x) {
    Tensor y(x.shape());
    auto xm = x.rows();
    auto ym = y.rows();
    for (Eigen::Index r = 0; r < xm.rows(); ++r) {
        const double m = xm.row(r).maxCoeff();
        ym.row(r) = (xm.row(r).array() - m).exp();
        ym.row(r) /= ym.row(r).sum();
    }
    return y;
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, AttentionCache* cache) {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.dim(1) != k.dim(1) || k.dim(0) != v.dim(0) ||
        q.dim(0) != k.dim(0)) {
        throw ShapeError("attention: incompatible shapes " + shape_string(q.shape()) + ", " +
                         shape_string(k.shape()) + ", " + shape_string(v.shape()));
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
    Tensor logits({q.dim(0), k.dim(0)});
    logits.rows().noalias() = (q.rows() * k.rows().transpose()) * scale;
    Tensor probs = softmax_rows(logits);
    Tensor out({q.dim(0), v.dim(1)});
    out.rows().noalias() = probs.rows() * v.rows();
    if (cache) {
        cache->probs = std::move(probs);
    }
    return out;
}

AttentionGrads attention_backward(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionCache& cache,
                                  const Tensor& dout) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
    auto p = cache.probs.rows();
    AttentionGrads g{Tensor(q.shape()), Tensor(k.shape()), Tensor(v.shape())};
    g.dv.rows().noalias() = p.transpose() * dout.rows();
    Matrix dp = dout.rows() * v.rows().transpose();
    Matrix ds(p.rows(), p.cols());
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const double dot = dp.row(r).dot(p.row(r));
        ds.row(r) = p.row(r).array() * (dp.row(r).array() - dot);
    }
    g.dq.rows().noalias() = (ds * k.rows()) * scale;
    g.dk.rows().noalias() = (ds.transpose() * q.rows()) * scale;
    return g;
}

LossAndGrad cross_entropy(const Tensor& logits, std::span<const int> labels) {
    if (logits.rank() != 2 || logits.dim(1) != 2 || logits.dim(0) != labels.size() || labels.empty()) {
        throw ShapeError("cross_entropy: logits must be [N,2] with N matching the labels");
    }
    for (int l : labels) {
        if (l != 0 && l != 1) {
            throw ValidationError("label", "must be 0 or 1, got " + std::to_string(l));
        }
    }
    const Tensor probs = softmax_rows(logits);
    const double n = static_cast<double>(labels.size());
    LossAndGrad out{0.0, Tensor(logits.shape())};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto y = static_cast<std::size_t>(labels[i]);
        const double a = logits.at(i, 0);
        const double b = logits.at(i, 1);
        const double m = std::max(a, b);
        const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
        out.loss += (lse - logits.at(i, y)) / n;
        for (std::size_t c = 0; c < 2; ++c) {
            out.grad.at(i, c) = (probs.at(i, c) - (c == y ? 1.0 : 0.0)) / n;
        }
    }
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("cosine_similarity: length mismatch");
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw DegenerateEmbeddingError("cosine_similarity of a zero vector");
    }
    return dot / std::sqrt(na * nb);
}

Tensor mean_over_joints(const Tensor& x) {
    Tensor y({x.dim(0), x.dim(2)});
    const double inv = 1.0 / static_cast<double>(x.dim(1));
    for (std::size_t t = 0; t < x.dim(0); ++t) {
        for (std::size_t j = 0; j < x.dim(1); ++j) {
            for (std::size_t c = 0; c < x.dim(2); ++c) {
                y.at(t, c) += x.at(t, j, c) * inv;
            }
        }
    }
    return y;
}

Tensor mean_over_joints_backward(const Tensor& dy, std::size_t joints) {
    Tensor dx({dy.dim(0), joints, dy.dim(1)});
    const double inv = 1.0 / static_cast<double>(joints);
    for (std::size_t t = 0; t < dy.dim(0); ++t) {
        for (std::size_t j = 0; j < joints; ++j) {
            for (std::size_t c = 0; c < dy.dim(1); ++c) {
                dx.at(t, j, c) = dy.at(t, c) * inv;
            }
        }
    }
    return dx;
}

Tensor mean_over_rows(const Tensor& x) {
    Tensor y({x.dim(1)});
    y.rows().row(0) = x.rows().colwise().mean();
    return y;
}

Tensor mean_over_rows_backward(const Tensor& dy, std::size_t rows) {
    Tensor dx({rows, dy.dim(0)});
    dx.rows().rowwise() = dy.rows().row(0) / static_cast<double>(rows);
    return dx;
}

} // namespace rallypose::nn
