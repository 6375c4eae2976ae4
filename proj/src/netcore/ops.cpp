#include "deconfound/netcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "deconfound/common.hpp"

namespace dcfd::net {

namespace {

constexpr double kLogClamp = 1e-12;

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

NodeRef grad_reverse(Tape& t, NodeRef x, const GrlConfig& cfg) {
    if (cfg.lambda < 0.0) {
        throw ConfigError("grad_reverse: negative lambda");
    }
    Tensor out = t.value(x);  // forward is the identity
    const double lambda = cfg.lambda;
    return t.record(
        std::move(out),
        [x, lambda](Tape& tp, NodeRef self) {
            const Tensor& g = tp.gradient(self);
            Tensor& gx = tp.grad_buffer(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += -lambda * g[i];
            }
        },
        "grad_reverse");
}

NodeRef conv1d(Tape& t, NodeRef x, NodeRef kernels, NodeRef bias) {
    const Tensor& xv = t.value(x);
    const Tensor& kv = t.value(kernels);
    const Tensor& bv = t.value(bias);
    require(xv.rank() == 2, "conv1d: input must be [T x Din]");
    require(kv.rank() == 3, "conv1d: kernels must be [K x Din x Dout]");
    require(bv.rank() == 1, "conv1d: bias must be [Dout]");
    const std::size_t T = xv.dim(0), din = xv.dim(1);
    const std::size_t K = kv.dim(0), dout = kv.dim(2);
    require(kv.dim(1) == din, "conv1d: kernel Din mismatch");
    require(bv.dim(0) == dout, "conv1d: bias Dout mismatch");
    if (T < K) {
        throw DataError("conv1d: sequence shorter than kernel width (T=" + std::to_string(T) +
                        ", K=" + std::to_string(K) + ")");
    }
    const std::size_t tout = T - K + 1;
    Tensor out({tout, dout});
    for (std::size_t ti = 0; ti < tout; ++ti) {
        for (std::size_t o = 0; o < dout; ++o) {
            double acc = bv[o];
            for (std::size_t k = 0; k < K; ++k) {
                for (std::size_t d = 0; d < din; ++d) {
                    acc += xv.at(ti + k, d) * kv.at(k, d, o);
                }
            }
            out.at(ti, o) = acc;
        }
    }
    return t.record(
        std::move(out),
        [x, kernels, bias, T, din, K, dout, tout](Tape& tp, NodeRef self) {
            const Tensor& g = tp.gradient(self);
            const Tensor& xv2 = tp.value(x);
            const Tensor& kv2 = tp.value(kernels);
            Tensor& gx = tp.grad_buffer(x);
            Tensor& gk = tp.grad_buffer(kernels);
            Tensor& gb = tp.grad_buffer(bias);
            (void)T;
            for (std::size_t ti = 0; ti < tout; ++ti) {
                for (std::size_t o = 0; o < dout; ++o) {
                    const double go = g.at(ti, o);
                    if (go == 0.0) continue;
                    gb[o] += go;
                    for (std::size_t k = 0; k < K; ++k) {
                        for (std::size_t d = 0; d < din; ++d) {
                            gx.at(ti + k, d) += go * kv2.at(k, d, o);
                            gk.at(k, d, o) += go * xv2.at(ti + k, d);
                        }
                    }
                }
            }
        },
        "conv1d");
}

NodeRef maxpool1d(Tape& t, NodeRef x, std::size_t width) {
    const Tensor& xv = t.value(x);
    require(xv.rank() == 2, "maxpool1d: input must be [T x D]");
    require(width >= 1, "maxpool1d: width must be >= 1");
    const std::size_t T = xv.dim(0), D = xv.dim(1);
    if (T == 0) throw DataError("maxpool1d: empty input");
    const std::size_t P = (T + width - 1) / width;
    Tensor out({P, D});
    // Earliest-index winner per (window, channel); strict > keeps ties left.
    std::vector<std::size_t> argmax(P * D);
    for (std::size_t p = 0; p < P; ++p) {
        const std::size_t lo = p * width;
        const std::size_t hi = std::min(T, lo + width);
        for (std::size_t d = 0; d < D; ++d) {
            std::size_t best = lo;
            double bestv = xv.at(lo, d);
            for (std::size_t ti = lo + 1; ti < hi; ++ti) {
                if (xv.at(ti, d) > bestv) {
                    bestv = xv.at(ti, d);
                    best = ti;
                }
            }
            out.at(p, d) = bestv;
            argmax[p * D + d] = best;
        }
    }
    return t.record(
        std::move(out),
        [x, D, P, argmax = std::move(argmax)](Tape& tp, NodeRef self) {
            const Tensor& g = tp.gradient(self);
            Tensor& gx = tp.grad_buffer(x);
            for (std::size_t p = 0; p < P; ++p) {
                for (std::size_t d = 0; d < D; ++d) {
                    gx.at(argmax[p * D + d], d) += g.at(p, d);
                }
            }
        },
        "maxpool1d");
}

NodeRef gru_cell_step(Tape& t, NodeRef h, NodeRef x, const GruCellRefs& p) {
    const Tensor& hv = t.value(h);
    const Tensor& xv = t.value(x);
    require(hv.rank() == 1 && xv.rank() == 1, "gru_cell_step: h and x must be vectors");
    const std::size_t H = hv.dim(0), D = xv.dim(0);
    const Tensor& wz = t.value(p.wz);
    const Tensor& uz = t.value(p.uz);
    const Tensor& bz = t.value(p.bz);
    require(wz.rank() == 2 && wz.dim(0) == D && wz.dim(1) == H, "gru_cell_step: Wz shape");
    require(uz.rank() == 2 && uz.dim(0) == H && uz.dim(1) == H, "gru_cell_step: Uz shape");
    require(bz.rank() == 1 && bz.dim(0) == H, "gru_cell_step: bz shape");
    require(t.value(p.wr).same_shape(wz) && t.value(p.wh).same_shape(wz),
            "gru_cell_step: Wr/Wh shape");
    require(t.value(p.ur).same_shape(uz) && t.value(p.uh).same_shape(uz),
            "gru_cell_step: Ur/Uh shape");
    require(t.value(p.br).same_shape(bz) && t.value(p.bh).same_shape(bz),
            "gru_cell_step: br/bh shape");

    const Tensor& wr = t.value(p.wr);
    const Tensor& ur = t.value(p.ur);
    const Tensor& br = t.value(p.br);
    const Tensor& wh = t.value(p.wh);
    const Tensor& uh = t.value(p.uh);
    const Tensor& bh = t.value(p.bh);

    std::vector<double> z(H), r(H), hc(H), rh(H);
    for (std::size_t j = 0; j < H; ++j) {
        double az = bz[j], ar = br[j];
        for (std::size_t d = 0; d < D; ++d) {
            az += xv[d] * wz.at(d, j);
            ar += xv[d] * wr.at(d, j);
        }
        for (std::size_t i = 0; i < H; ++i) {
            az += hv[i] * uz.at(i, j);
            ar += hv[i] * ur.at(i, j);
        }
        z[j] = sigmoid(az);
        r[j] = sigmoid(ar);
    }
    for (std::size_t i = 0; i < H; ++i) rh[i] = r[i] * hv[i];
    for (std::size_t j = 0; j < H; ++j) {
        double ah = bh[j];
        for (std::size_t d = 0; d < D; ++d) ah += xv[d] * wh.at(d, j);
        for (std::size_t i = 0; i < H; ++i) ah += rh[i] * uh.at(i, j);
        hc[j] = std::tanh(ah);
    }
    Tensor out({H});
    for (std::size_t j = 0; j < H; ++j) {
        out[j] = (1.0 - z[j]) * hv[j] + z[j] * hc[j];
    }

    GruCellRefs refs = p;
    return t.record(
        std::move(out),
        [h, x, refs, H, D, z = std::move(z), r = std::move(r), hc = std::move(hc),
         rh = std::move(rh)](Tape& tp, NodeRef self) {
            const Tensor& g = tp.gradient(self);
            const Tensor& hv2 = tp.value(h);
            const Tensor& xv2 = tp.value(x);
            const Tensor& wz2 = tp.value(refs.wz);
            const Tensor& uz2 = tp.value(refs.uz);
            const Tensor& wr2 = tp.value(refs.wr);
            const Tensor& ur2 = tp.value(refs.ur);
            const Tensor& wh2 = tp.value(refs.wh);
            const Tensor& uh2 = tp.value(refs.uh);

            // dL/d(pre-activations) for the three gates.
            std::vector<double> daz(H), dar(H), dah(H), drh(H);
            for (std::size_t j = 0; j < H; ++j) {
                const double gj = g[j];
                const double dz = gj * (hc[j] - hv2[j]);
                const double dhc = gj * z[j];
                daz[j] = dz * z[j] * (1.0 - z[j]);
                dah[j] = dhc * (1.0 - hc[j] * hc[j]);
            }
            // Through hcand = tanh(x Wh + rh Uh + bh).
            for (std::size_t i = 0; i < H; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < H; ++j) acc += uh2.at(i, j) * dah[j];
                drh[i] = acc;
            }
            for (std::size_t j = 0; j < H; ++j) {
                const double dr = drh[j] * hv2[j];
                dar[j] = dr * r[j] * (1.0 - r[j]);
            }

            Tensor& gh = tp.grad_buffer(h);
            Tensor& gx = tp.grad_buffer(x);
            Tensor& gwz = tp.grad_buffer(refs.wz);
            Tensor& guz = tp.grad_buffer(refs.uz);
            Tensor& gbz = tp.grad_buffer(refs.bz);
            Tensor& gwr = tp.grad_buffer(refs.wr);
            Tensor& gur = tp.grad_buffer(refs.ur);
            Tensor& gbr = tp.grad_buffer(refs.br);
            Tensor& gwh = tp.grad_buffer(refs.wh);
            Tensor& guh = tp.grad_buffer(refs.uh);
            Tensor& gbh = tp.grad_buffer(refs.bh);

            for (std::size_t j = 0; j < H; ++j) {
                // Direct paths into h': (1-z) .* h and r .* h inside hcand.
                gh[j] += g[j] * (1.0 - z[j]) + drh[j] * r[j];
                gbz[j] += daz[j];
                gbr[j] += dar[j];
                gbh[j] += dah[j];
            }
            for (std::size_t d = 0; d < D; ++d) {
                double acc = 0.0;
                for (std::size_t j = 0; j < H; ++j) {
                    acc += wz2.at(d, j) * daz[j] + wr2.at(d, j) * dar[j] + wh2.at(d, j) * dah[j];
                    gwz.at(d, j) += xv2[d] * daz[j];
                    gwr.at(d, j) += xv2[d] * dar[j];
                    gwh.at(d, j) += xv2[d] * dah[j];
                }
                gx[d] += acc;
            }
            for (std::size_t i = 0; i < H; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < H; ++j) {
                    acc += uz2.at(i, j) * daz[j] + ur2.at(i, j) * dar[j];
                    guz.at(i, j) += hv2[i] * daz[j];
                    gur.at(i, j) += hv2[i] * dar[j];
                    guh.at(i, j) += rh[i] * dah[j];
                }
                gh[i] += acc;
            }
        },
        "gru_cell_step");
}

NodeRef affine(Tape& t, NodeRef x, NodeRef w, NodeRef b) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    const Tensor& bv = t.value(b);
    require(xv.rank() == 1, "affine: input must be a vector");
    require(wv.rank() == 2, "affine: weights must be [D x E]");
    require(bv.rank() == 1, "affine: bias must be [E]");
    const std::size_t D = xv.dim(0), E = wv.dim(1);
    require(wv.dim(0) == D, "affine: weight/input dim mismatch");
    require(bv.dim(0) == E, "affine: bias dim mismatch");
    Tensor out({E});
    for (std::size_t e = 0; e < E; ++e) {
        double acc = bv[e];
        for (std::size_t d = 0; d < D; ++d) acc += xv[d] * wv.at(d, e);
        out[e] = acc;
    }
    return t.record(
        std::move(out),
        [x, w, b, D, E](Tape& tp, NodeRef self) {
            const Tensor& g = tp.gradient(self);
            const Tensor& xv2 = tp.value(x);
            const Tensor& wv2 = tp.value(w);
            Tensor& gx = tp.grad_buffer(x);
            Tensor& gw = tp.grad_buffer(w);
            Tensor& gb = tp.grad_buffer(b);
            for (std::size_t e = 0; e < E; ++e) gb[e] += g[e];
            for (std::size_t d = 0; d < D; ++d) {
                double acc = 0.0;
                for (std::size_t e = 0; e < E; ++e) {
                    acc += wv2.at(d, e) * g[e];
                    gw.at(d, e) += xv2[d] * g[e];
                }
                gx[d] += acc;
            }
        },
        "affine");
}

NodeRef relu(Tape& t, NodeRef x) {
    const Tensor& xv = t.value(x);
    Tensor out = xv;
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    return t.record(
        std::move(out),
        [x](Tape& tp, NodeRef self) {
            const Tensor& g = tp.gradient(self);
            const Tensor& xv2 = tp.value(x);
            Tensor& gx = tp.grad_buffer(x);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (xv2[i] > 0.0) gx[i] += g[i];
            }
        },
        "relu");
}

NodeRef softmax(Tape& t, NodeRef x) {
    const Tensor& xv = t.value(x);
    require(xv.rank() == 1, "softmax: input must be a vector");
    require(xv.size() >= 1, "softmax: empty input");
    Tensor out({xv.dim(0)});
    double mx = xv[0];
    for (std::size_t i = 1; i < xv.size(); ++i) mx = std::max(mx, xv[i]);
    double denom = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) {
        out[i] = std::exp(xv[i] - mx);
        denom += out[i];
    }
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] /= denom;
    return t.record(
        std::move(out),
        [x](Tape& tp, NodeRef self) {
            const Tensor& g = tp.gradient(self);
            const Tensor& y = tp.value(self);
            Tensor& gx = tp.grad_buffer(x);
            double dot = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += y[i] * (g[i] - dot);
            }
        },
        "softmax");
}

NodeRef dense(Tape& t, NodeRef x, NodeRef w, NodeRef b, Activation act) {
    NodeRef a = affine(t, x, w, b);
    switch (act) {
        case Activation::none:
            return a;
        case Activation::relu:
            return relu(t, a);
        case Activation::softmax:
            return softmax(t, a);
    }
    throw std::invalid_argument("dense: unknown activation");
}

NodeRef weighted_cross_entropy(Tape& t, NodeRef probs, std::size_t target,
                               const Tensor& class_weights) {
    const Tensor& pv = t.value(probs);
    require(pv.rank() == 1, "weighted_cross_entropy: probs must be a vector");
    const std::size_t C = pv.dim(0);
    require(target < C, "weighted_cross_entropy: target class out of range");
    require(class_weights.rank() == 1 && class_weights.dim(0) == C,
            "weighted_cross_entropy: class_weights shape mismatch");
    double mass = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        require(class_weights[c] > 0.0, "weighted_cross_entropy: class weights must be positive");
        require(pv[c] >= 0.0, "weighted_cross_entropy: probs must be non-negative");
        mass += pv[c];
    }
    if (std::abs(mass - 1.0) > 1e-9) {
        throw std::invalid_argument("weighted_cross_entropy: probs not on the simplex");
    }
    const double w = class_weights[target];
    const double p = std::max(pv[target], kLogClamp);
    Tensor out = Tensor::scalar(-w * std::log(p));
    return t.record(
        std::move(out),
        [probs, target, w](Tape& tp, NodeRef self) {
            const double g = tp.gradient(self)[0];
            const Tensor& pv2 = tp.value(probs);
            Tensor& gp = tp.grad_buffer(probs);
            if (pv2[target] > kLogClamp) {  // clamped region has zero slope
                gp[target] += g * (-w / pv2[target]);
            }
        },
        "weighted_cross_entropy");
}

NodeRef concat(Tape& t, NodeRef a, NodeRef b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require(av.rank() == 1 && bv.rank() == 1, "concat: inputs must be vectors");
    std::vector<double> vals;
    vals.reserve(av.size() + bv.size());
    vals.insert(vals.end(), av.values().begin(), av.values().end());
    vals.insert(vals.end(), bv.values().begin(), bv.values().end());
    const std::size_t na = av.size();
    return t.record(
        Tensor::vector(std::move(vals)),
        [a, b, na](Tape& tp, NodeRef self) {
            const Tensor& g = tp.gradient(self);
            Tensor& ga = tp.grad_buffer(a);
            Tensor& gb = tp.grad_buffer(b);
            for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
            for (std::size_t i = na; i < g.size(); ++i) gb[i - na] += g[i];
        },
        "concat");
}

NodeRef row(Tape& t, NodeRef matrix, std::size_t r) {
    const Tensor& mv = t.value(matrix);
    require(mv.rank() == 2, "row: input must be a matrix");
    require(r < mv.dim(0), "row: index out of range");
    const std::size_t D = mv.dim(1);
    Tensor out({D});
    for (std::size_t d = 0; d < D; ++d) out[d] = mv.at(r, d);
    return t.record(
        std::move(out),
        [matrix, r, D](Tape& tp, NodeRef self) {
            const Tensor& g = tp.gradient(self);
            Tensor& gm = tp.grad_buffer(matrix);
            for (std::size_t d = 0; d < D; ++d) gm.at(r, d) += g[d];
        },
        "row");
}

NodeRef stack_rows(Tape& t, const std::vector<NodeRef>& rows) {
    require(!rows.empty(), "stack_rows: need at least one row");
    const std::size_t D = t.value(rows[0]).dim(0);
    for (NodeRef r : rows) {
        require(t.value(r).rank() == 1 && t.value(r).dim(0) == D,
                "stack_rows: rows must be equal-length vectors");
    }
    Tensor out({rows.size(), D});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Tensor& rv = t.value(rows[i]);
        for (std::size_t d = 0; d < D; ++d) out.at(i, d) = rv[d];
    }
    return t.record(
        std::move(out),
        [rows, D](Tape& tp, NodeRef self) {
            const Tensor& g = tp.gradient(self);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                Tensor& gr = tp.grad_buffer(rows[i]);
                for (std::size_t d = 0; d < D; ++d) gr[d] += g.at(i, d);
            }
        },
        "stack_rows");
}

NodeRef add(Tape& t, NodeRef a, NodeRef b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require(av.same_shape(bv), "add: shape mismatch");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return t.record(
        std::move(out),
        [a, b](Tape& tp, NodeRef self) {
            const Tensor& g = tp.gradient(self);
            Tensor& ga = tp.grad_buffer(a);
            Tensor& gb = tp.grad_buffer(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
        },
        "add");
}

NodeRef scale(Tape& t, NodeRef x, double c) {
    Tensor out = t.value(x);
    for (double& v : out.values()) v *= c;
    return t.record(
        std::move(out),
        [x, c](Tape& tp, NodeRef self) {
            const Tensor& g = tp.gradient(self);
            Tensor& gx = tp.grad_buffer(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += c * g[i];
        },
        "scale");
}

NodeRef sum(Tape& t, NodeRef x) {
    const Tensor& xv = t.value(x);
    double acc = 0.0;
    for (double v : xv.values()) acc += v;
    return t.record(
        Tensor::scalar(acc),
        [x](Tape& tp, NodeRef self) {
            const double g = tp.gradient(self)[0];
            Tensor& gx = tp.grad_buffer(x);
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
        },
        "sum");
}

}  // namespace dcfd::net
