#include "liberation/rmt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "liberation/format.hpp"

namespace liberation {

namespace {
constexpr double kPi = std::numbers::pi;
using Cx = std::complex<double>;
}  // namespace

ComplexMatrix ComplexMatrix::identity(int dim) {
    ComplexMatrix I(dim);
    for (int i = 0; i < dim; ++i) I(i, i) = 1.0;
    return I;
}

ComplexMatrix multiply(const ComplexMatrix& A, const ComplexMatrix& B) {
    const int n = A.n;
    ComplexMatrix C(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const Cx aik = A(i, k);
            if (aik == 0.0) continue;
            const Cx* brow = &B.a[static_cast<std::size_t>(k) * n];
            Cx* crow = &C.a[static_cast<std::size_t>(i) * n];
            for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
    return C;
}

ComplexMatrix adjoint(const ComplexMatrix& A) {
    ComplexMatrix B(A.n);
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j < A.n; ++j) B(j, i) = std::conj(A(i, j));
    return B;
}

double hermiticity_error(const ComplexMatrix& A) {
    double e = 0.0;
    for (int i = 0; i < A.n; ++i)
        for (int j = 0; j <= i; ++j) e = std::max(e, std::abs(A(i, j) - std::conj(A(j, i))));
    return e;
}

double unitarity_error(const ComplexMatrix& U) {
    const int n = U.n;
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            Cx s = 0.0;
            for (int k = 0; k < n; ++k) s += std::conj(U(k, i)) * U(k, j);
            if (i == j) s -= 1.0;
            e = std::max(e, std::abs(s));
        }
    }
    return e;
}

namespace {
std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed ^ (0x632be59bd9b4e019ULL * (stream_id + 1));
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s) >> 32),
                      static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s) >> 32)};
    engine_.seed(seq);
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() {
    // 53-bit mantissa, strictly inside (0,1)
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
}

HermitianMatrix gue_increment(int d, double dt, RngStream& rng) {
    if (d < 1) throw BadParameter("gue_increment: d must be >= 1");
    if (dt < 0.0) throw BadParameter("gue_increment: dt must be >= 0");
    HermitianMatrix X(d);
    if (dt == 0.0) return X;
    const double sd = std::sqrt(dt / d);        // diagonal, real
    const double so = std::sqrt(dt / (2.0 * d));  // off-diagonal, per component
    for (int i = 0; i < d; ++i) {
        X(i, i) = sd * rng.gaussian();
        for (int j = i + 1; j < d; ++j) {
            const Cx v(so * rng.gaussian(), so * rng.gaussian());
            X(i, j) = v;
            X(j, i) = std::conj(v);
        }
    }
    return X;
}

UnitaryMatrix haar_unitary(int d, RngStream& rng) {
    if (d < 1) throw BadParameter("haar_unitary: d must be >= 1");
    // complex Ginibre, then modified Gram-Schmidt with one reorthogonalization
    // pass; MGS keeps R_ii real positive, which is exactly the phase fix
    ComplexMatrix G(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) G(i, j) = Cx(rng.gaussian(), rng.gaussian());
    UnitaryMatrix Q(d);
    std::vector<Cx> v(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] = G(i, j);
        for (int pass = 0; pass < 2; ++pass) {
            for (int k = 0; k < j; ++k) {
                Cx proj = 0.0;
                for (int i = 0; i < d; ++i)
                    proj += std::conj(Q(i, k)) * v[static_cast<std::size_t>(i)];
                for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] -= proj * Q(i, k);
            }
        }
        double norm = 0.0;
        for (int i = 0; i < d; ++i) norm += std::norm(v[static_cast<std::size_t>(i)]);
        norm = std::sqrt(norm);
        for (int i = 0; i < d; ++i) Q(i, j) = v[static_cast<std::size_t>(i)] / norm;
    }
    return Q;
}

EigenResult hermitian_eigen(const HermitianMatrix& A_in) {
    const int n = A_in.n;
    if (n < 1) throw BadParameter("hermitian_eigen: empty matrix");
    ComplexMatrix A = A_in;
    ComplexMatrix Q = ComplexMatrix::identity(n);

    // Householder reduction to complex tridiagonal with A = Q T Q^*
    std::vector<Cx> w(static_cast<std::size_t>(n)), u(static_cast<std::size_t>(n)),
        q(static_cast<std::size_t>(n));
    for (int k = 0; k + 2 < n; ++k) {
        double xnorm2 = 0.0;
        for (int i = k + 1; i < n; ++i) xnorm2 += std::norm(A(i, k));
        const double xnorm = std::sqrt(xnorm2);
        if (xnorm == 0.0) continue;
        const Cx x0 = A(k + 1, k);
        const Cx phase = (x0 == 0.0) ? Cx(1.0, 0.0) : x0 / std::abs(x0);
        const Cx alpha = -phase * xnorm;
        // v = x - alpha e_1, normalized
        double vnorm2 = 0.0;
        for (int i = k + 1; i < n; ++i) {
            Cx vi = A(i, k);
            if (i == k + 1) vi -= alpha;
            w[static_cast<std::size_t>(i)] = vi;
            vnorm2 += std::norm(vi);
        }
        if (vnorm2 == 0.0) continue;
        const double inv = 1.0 / std::sqrt(vnorm2);
        for (int i = k + 1; i < n; ++i) w[static_cast<std::size_t>(i)] *= inv;

        // trailing block update A <- A - 2 w q^* - 2 q w^*, q = u - (w^* u) w
        for (int i = k + 1; i < n; ++i) {
            Cx s = 0.0;
            for (int j = k + 1; j < n; ++j) s += A(i, j) * w[static_cast<std::size_t>(j)];
            u[static_cast<std::size_t>(i)] = s;
        }
        Cx wu = 0.0;
        for (int i = k + 1; i < n; ++i)
            wu += std::conj(w[static_cast<std::size_t>(i)]) * u[static_cast<std::size_t>(i)];
        for (int i = k + 1; i < n; ++i)
            q[static_cast<std::size_t>(i)] =
                u[static_cast<std::size_t>(i)] - wu * w[static_cast<std::size_t>(i)];
        for (int i = k + 1; i < n; ++i) {
            const Cx wi = w[static_cast<std::size_t>(i)];
            const Cx qi = q[static_cast<std::size_t>(i)];
            for (int j = k + 1; j < n; ++j) {
                A(i, j) -= 2.0 * (wi * std::conj(q[static_cast<std::size_t>(j)]) +
                                  qi * std::conj(w[static_cast<std::size_t>(j)]));
            }
        }
        A(k + 1, k) = alpha;
        A(k, k + 1) = std::conj(alpha);
        for (int i = k + 2; i < n; ++i) {
            A(i, k) = 0.0;
            A(k, i) = 0.0;
        }
        // Q <- Q (I - 2 w w^*)
        for (int i = 0; i < n; ++i) {
            Cx s = 0.0;
            for (int j = k + 1; j < n; ++j) s += Q(i, j) * w[static_cast<std::size_t>(j)];
            s *= 2.0;
            for (int j = k + 1; j < n; ++j)
                Q(i, j) -= s * std::conj(w[static_cast<std::size_t>(j)]);
        }
    }

    // phase-rotate the off-diagonal real nonnegative: T -> D^* T D
    std::vector<double> diag(static_cast<std::size_t>(n)), off(static_cast<std::size_t>(n), 0.0);
    Cx phi = 1.0;
    std::vector<Cx> phases(static_cast<std::size_t>(n));
    phases[0] = 1.0;
    for (int i = 0; i < n; ++i) {
        diag[static_cast<std::size_t>(i)] = A(i, i).real();
        if (i + 1 < n) {
            const Cx e = A(i + 1, i);
            const double m = std::abs(e);
            const Cx next = (m == 0.0) ? phi : phi * (e / m);
            off[static_cast<std::size_t>(i)] = m;
            phi = next;
            phases[static_cast<std::size_t>(i + 1)] = phi;
        }
    }
    // eigenvectors kept as rows during QL, so the plane rotations stream
    // along contiguous memory; transposed back at the end
    ComplexMatrix Z(n);
    for (int j = 0; j < n; ++j) {
        const Cx p = phases[static_cast<std::size_t>(j)];
        for (int i = 0; i < n; ++i) Z(j, i) = Q(i, j) * p;
    }

    // implicit-shift QL on the real symmetric tridiagonal, accumulating Z
    std::vector<double> d = diag, e = off;
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[static_cast<std::size_t>(m)]) +
                                  std::abs(d[static_cast<std::size_t>(m + 1)]);
                if (std::abs(e[static_cast<std::size_t>(m)]) <= 1e-300 ||
                    std::abs(e[static_cast<std::size_t>(m)]) <=
                        std::numeric_limits<double>::epsilon() * dd)
                    break;
            }
            if (m != l) {
                if (iter++ == 30)
                    throw NoConvergence("hermitian_eigen: QL exceeded 30 sweeps per value");
                double g = (d[static_cast<std::size_t>(l + 1)] - d[static_cast<std::size_t>(l)]) /
                           (2.0 * e[static_cast<std::size_t>(l)]);
                double r = std::hypot(g, 1.0);
                g = d[static_cast<std::size_t>(m)] - d[static_cast<std::size_t>(l)] +
                    e[static_cast<std::size_t>(l)] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[static_cast<std::size_t>(i)];
                    const double bb = c * e[static_cast<std::size_t>(i)];
                    r = std::hypot(f, g);
                    e[static_cast<std::size_t>(i + 1)] = r;
                    if (r == 0.0) {
                        d[static_cast<std::size_t>(i + 1)] -= p;
                        e[static_cast<std::size_t>(m)] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[static_cast<std::size_t>(i + 1)] - p;
                    r = (d[static_cast<std::size_t>(i)] - g) * s + 2.0 * c * bb;
                    p = s * r;
                    d[static_cast<std::size_t>(i + 1)] = g + p;
                    g = c * r - bb;
                    // rotate eigenvector rows i, i+1
                    {
                        Cx* zi = &Z.a[static_cast<std::size_t>(i) * n];
                        Cx* zi1 = &Z.a[(static_cast<std::size_t>(i) + 1) * n];
                        for (int col = 0; col < n; ++col) {
                            const Cx a0 = zi[col];
                            const Cx a1 = zi1[col];
                            zi1[col] = s * a0 + c * a1;
                            zi[col] = c * a0 - s * a1;
                        }
                    }
                }
                if (underflow) continue;
                d[static_cast<std::size_t>(l)] -= p;
                e[static_cast<std::size_t>(l)] = g;
                e[static_cast<std::size_t>(m)] = 0.0;
            }
        } while (m != l);
    }

    // ascending sort with column permutation
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::sort(idx.begin(), idx.end(), [&](int i, int j) {
        return d[static_cast<std::size_t>(i)] < d[static_cast<std::size_t>(j)];
    });
    EigenResult out;
    out.values.resize(static_cast<std::size_t>(n));
    out.vectors = ComplexMatrix(n);
    for (int j = 0; j < n; ++j) {
        const int src = idx[static_cast<std::size_t>(j)];
        out.values[static_cast<std::size_t>(j)] = d[static_cast<std::size_t>(src)];
        for (int i = 0; i < n; ++i) out.vectors(i, j) = Z(src, i);
    }
    return out;
}

UnitaryMatrix evolve_ubm(int d, double t, int steps, RngStream& rng) {
    if (steps < 1) throw BadParameter("evolve_ubm: steps must be >= 1");
    UnitaryMatrix U = ComplexMatrix::identity(d);
    if (t == 0.0) return U;
    const double dt = t / steps;
    for (int s = 0; s < steps; ++s) {
        const HermitianMatrix dX = gue_increment(d, dt, rng);
        const EigenResult eg = hermitian_eigen(dX);
        // U exp(i dX) = ((U V) diag(e^{i lambda})) V^*
        ComplexMatrix W = multiply(U, eg.vectors);
        for (int i = 0; i < d; ++i) {
            const Cx ph = std::polar(1.0, eg.values[static_cast<std::size_t>(i)]);
            for (int row = 0; row < d; ++row) W(row, i) *= ph;
        }
        U = multiply(W, adjoint(eg.vectors));
    }
    return U;
}

double mean_trace_power(const UnitaryMatrix& U, int k) {
    const int n = U.n;
    ComplexMatrix P = U;
    for (int i = 1; i < k; ++i) P = multiply(P, U);
    Cx tr = 0.0;
    for (int i = 0; i < n; ++i) tr += P(i, i);
    return tr.real() / n;
}

namespace {

struct TrialAccum {
    std::vector<std::int64_t> bins;
    std::int64_t atom0 = 0, atom1 = 0;
    double tr_u = 0.0, tr_u2 = 0.0;
};

}  // namespace

EmpiricalResult empirical_angle_measure(int d, const TraceParams& p, double t, int steps,
                                        int trials, Coupling coupling, std::uint64_t seed,
                                        const EmpiricalOptions& opts) {
    if (trials < 1) throw BadParameter("empirical_angle_measure: trials >= 1");
    const int kp = static_cast<int>(std::lround(p.alpha * d));
    const int kq = static_cast<int>(std::lround(p.beta * d));
    if (kp < 1 || kq < 1 || kp > d || kq > d)
        throw BadParameter("empirical_angle_measure: degenerate projection rank");

    // common coupling unitary on stream 0
    ComplexMatrix Qproj;  // the projection Q, dense
    {
        Qproj = ComplexMatrix(d);
        if (coupling == Coupling::equal) {
            for (int i = 0; i < kq; ++i) Qproj(i, i) = 1.0;
        } else {
            RngStream rq(seed, 0);
            const UnitaryMatrix V = haar_unitary(d, rq);
            // Q = V diag(1_kq) V^*
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    Cx s = 0.0;
                    for (int k = 0; k < kq; ++k) s += V(i, k) * std::conj(V(j, k));
                    Qproj(i, j) = s;
                }
        }
    }

    const double binw = 1.0 / opts.bins;
    std::vector<TrialAccum> per_trial(static_cast<std::size_t>(trials));
    std::atomic<int> next{0};
    const unsigned hw = opts.threads > 0 ? static_cast<unsigned>(opts.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
    const unsigned nthreads = std::min<unsigned>(hw, static_cast<unsigned>(trials));

    auto run_trial = [&](int trial) {
        RngStream rng(seed, static_cast<std::uint64_t>(trial) + 1);
        const UnitaryMatrix U = evolve_ubm(d, t, steps, rng);

        TrialAccum acc;
        acc.bins.assign(static_cast<std::size_t>(opts.bins), 0);
        acc.tr_u = mean_trace_power(U, 1);
        acc.tr_u2 = mean_trace_power(U, 2);

        // A = Q (U P U^*) Q
        ComplexMatrix W(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                Cx s = 0.0;
                for (int k = 0; k < kp; ++k) s += U(i, k) * std::conj(U(j, k));
                W(i, j) = s;
            }
        ComplexMatrix A = multiply(Qproj, multiply(W, Qproj));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < i; ++j) {
                const Cx s = 0.5 * (A(i, j) + std::conj(A(j, i)));
                A(i, j) = s;
                A(j, i) = std::conj(s);
            }
        const EigenResult eg = hermitian_eigen(A);
        for (double lam : eg.values) {
            if (std::abs(lam) <= opts.atom_tol) {
                ++acc.atom0;
            } else if (std::abs(lam - 1.0) <= opts.atom_tol) {
                ++acc.atom1;
            } else {
                const double cl = std::clamp(lam, 0.0, 1.0 - 1e-15);
                const int b = std::min(opts.bins - 1, static_cast<int>(cl / binw));
                ++acc.bins[static_cast<std::size_t>(b)];
            }
        }
        per_trial[static_cast<std::size_t>(trial)] = std::move(acc);
    };

    if (nthreads <= 1) {
        for (int trial = 0; trial < trials; ++trial) run_trial(trial);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (unsigned w = 0; w < nthreads; ++w)
            pool.emplace_back([&] {
                for (int trial = next.fetch_add(1); trial < trials; trial = next.fetch_add(1))
                    run_trial(trial);
            });
        for (auto& th : pool) th.join();
    }

    // order-independent accumulation: sum per-trial histograms in trial order
    EmpiricalResult out;
    out.bin_counts.assign(static_cast<std::size_t>(opts.bins), 0);
    for (const auto& acc : per_trial) {
        for (int b = 0; b < opts.bins; ++b)
            out.bin_counts[static_cast<std::size_t>(b)] += acc.bins[static_cast<std::size_t>(b)];
        out.atom0_count += acc.atom0;
        out.atom1_count += acc.atom1;
        out.mean_trace_u += acc.tr_u;
        out.mean_trace_u2 += acc.tr_u2;
    }
    out.mean_trace_u /= trials;
    out.mean_trace_u2 /= trials;
    out.total_count = static_cast<std::int64_t>(trials) * d;

    const double norm = static_cast<double>(out.total_count);
    out.measure.add_atom(0.0, out.atom0_count / norm);
    out.measure.add_atom(1.0, out.atom1_count / norm);
    out.measure.density.nodes.resize(static_cast<std::size_t>(opts.bins));
    out.measure.density.values.resize(static_cast<std::size_t>(opts.bins));
    out.measure.density.weights.assign(static_cast<std::size_t>(opts.bins), binw);
    for (int b = 0; b < opts.bins; ++b) {
        out.measure.density.nodes[static_cast<std::size_t>(b)] = (b + 0.5) * binw;
        out.measure.density.values[static_cast<std::size_t>(b)] =
            out.bin_counts[static_cast<std::size_t>(b)] / (norm * binw);
    }
    return out;
}

double atom_mass_at_one(std::span<const double> eigenvalues, double tol) {
    if (eigenvalues.empty()) return 0.0;
    for (double lam : eigenvalues)
        if (lam < -tol || lam > 1.0 + tol)
            throw BadParameter("atom_mass_at_one: eigenvalue outside [-tol, 1+tol]");
    std::size_t c = 0;
    for (double lam : eigenvalues)
        if (std::abs(lam - 1.0) <= tol) ++c;
    return static_cast<double>(c) / static_cast<double>(eigenvalues.size());
}

double atom_mass_at_one(const SpectralMeasure& m, double tol) {
    return m.atom_mass_at(1.0, tol);
}

void write_histogram_csv(std::ostream& os, const EmpiricalResult& r) {
    os << "bin_left,bin_right,count\n";
    const double binw = 1.0 / static_cast<double>(r.bin_counts.size());
    for (std::size_t b = 0; b < r.bin_counts.size(); ++b)
        os << fmt17(b * binw) << "," << fmt17((b + 1) * binw) << "," << r.bin_counts[b]
           << "\n";
}

std::string atoms_sidecar_json(const EmpiricalResult& r) {
    nlohmann::json j;
    j["atoms"] = nlohmann::json::array();
    const double norm = static_cast<double>(r.total_count);
    j["atoms"].push_back({{"x", 0.0}, {"m", r.atom0_count / norm}});
    j["atoms"].push_back({{"x", 1.0}, {"m", r.atom1_count / norm}});
    return j.dump();
}

}  // namespace liberation
