#pragma once

// Monte Carlo oracle: Brownian motion on U(d), Haar unitaries, and empirical
// spectral measures of Q U_t P U_t^* Q.  Self-contained dense complex linear
// algebra; the eigensolver is Householder tridiagonalization plus
// implicit-shift QL, certified by residuals.

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "liberation/measures.hpp"

namespace liberation {

struct ComplexMatrix {
    int n = 0;
    std::vector<std::complex<double>> a;  // row-major, n*n

    ComplexMatrix() = default;
    explicit ComplexMatrix(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim) {}
    std::complex<double>& operator()(int i, int j) {
        return a[static_cast<std::size_t>(i) * n + j];
    }
    const std::complex<double>& operator()(int i, int j) const {
        return a[static_cast<std::size_t>(i) * n + j];
    }
    static ComplexMatrix identity(int dim);
};

using HermitianMatrix = ComplexMatrix;  // A = A^*
using UnitaryMatrix = ComplexMatrix;    // U^* U = I

ComplexMatrix multiply(const ComplexMatrix& A, const ComplexMatrix& B);
ComplexMatrix adjoint(const ComplexMatrix& A);
double hermiticity_error(const ComplexMatrix& A);   // max |A - A^*|
double unitarity_error(const ComplexMatrix& U);     // max |U^* U - I|

// Deterministic stream: identical (seed, stream_id) reproduce identical draws.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);
    double uniform();   // in (0,1)
    double gaussian();  // standard normal (Box-Muller)
    std::uint64_t next_u64();

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Hermitian Gaussian increment with E[(1/d) Tr(dX^2)] = dt: complex
// off-diagonal variance dt/d, real diagonal variance dt/d.
HermitianMatrix gue_increment(int d, double dt, RngStream& rng);

// QR of a complex Ginibre matrix with the R-diagonal phase fixed positive.
UnitaryMatrix haar_unitary(int d, RngStream& rng);

struct EigenResult {
    std::vector<double> values;  // ascending
    ComplexMatrix vectors;       // columns are eigenvectors
};

// A = V diag(lambda) V^*; throws NoConvergence after 30 sweeps per value.
EigenResult hermitian_eigen(const HermitianMatrix& A);

// Geometric Euler U_{k+1} = U_k exp(i dX_k): exactly unitary at every step,
// weak order 1 toward the unitary Brownian motion.
UnitaryMatrix evolve_ubm(int d, double t, int steps, RngStream& rng);

double mean_trace_power(const UnitaryMatrix& U, int k);  // (1/d) Re Tr U^k

enum class Coupling { equal, haar_free };

struct EmpiricalOptions {
    int bins = 200;
    double atom_tol = 1e-8;
    int threads = 0;  // 0 = hardware concurrency
};

struct EmpiricalResult {
    SpectralMeasure measure;
    std::vector<std::int64_t> bin_counts;  // size bins
    std::int64_t atom0_count = 0;
    std::int64_t atom1_count = 0;
    std::int64_t total_count = 0;          // trials * d
    double mean_trace_u = 0.0;             // (1/d) E Re Tr U_t
    double mean_trace_u2 = 0.0;            // (1/d) E Re Tr U_t^2
};

// Accumulates eigenvalues of Q U_t P U_t^* Q over independent trials, each on
// its own (seed, trial) stream; the histogram is summed in trial order, so the
// result is bitwise independent of the thread partitioning.
EmpiricalResult empirical_angle_measure(int d, const TraceParams& p, double t,
                                        int steps, int trials, Coupling coupling,
                                        std::uint64_t seed,
                                        const EmpiricalOptions& opts = {});

double atom_mass_at_one(std::span<const double> eigenvalues, double tol);
double atom_mass_at_one(const SpectralMeasure& m, double tol);

// CSV: bin_left,bin_right,count; JSON sidecar {"atoms":[{"x":..,"m":..}]}
void write_histogram_csv(std::ostream& os, const EmpiricalResult& r);
std::string atoms_sidecar_json(const EmpiricalResult& r);

}  // namespace liberation
