// Times the OpenMP kernels against their serial reference implementations and
// checks that both produce identical results. Not a correctness test (those
// live under tests/); this is for eyeballing the speedup on a given machine.

#include <chrono>
#include <cstdio>
#include <vector>

#include "heavychain/chaining.hpp"
#include "heavychain/distributions.hpp"
#include "heavychain/linalg.hpp"
#include "heavychain/parallel.hpp"

using namespace heavychain;

namespace {

template <typename F>
double time_best_of(F&& fn, int reps = 3) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

bool bit_identical(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.rows() * a.cols(); ++i)
        if (a.data()[i] != b.data()[i]) return false;
    return true;
}

} // namespace

int main() {
    DistributionSpec gauss;
    gauss.kind = DistKind::gaussian;

    std::printf("%-34s %10s %10s %8s %6s\n", "kernel", "serial[s]", "openmp[s]",
                "speedup", "equal");

    // Gram matrix A^T A
    {
        const auto A = sample_matrix(gauss, 3000, 250, 42).data;
        Matrix Gs, Gp;
        const double ts = time_best_of([&] { Gs = gram_serial(A); });
        const double tp = time_best_of([&] { Gp = gram(A); });
        std::printf("%-34s %10.4f %10.4f %7.2fx %6s\n", "gram 3000x250", ts, tp, ts / tp,
                    bit_identical(Gs, Gp) ? "yes" : "NO");
    }

    // Bernoulli process suprema (Monte Carlo trial loop)
    {
        std::vector<Vec> V;
        Engine eng = make_engine(7);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int v = 0; v < 64; ++v) {
            Vec vec(512);
            for (double& x : vec) x = normal(eng);
            V.push_back(vec);
        }
        std::vector<double> rs, rp;
        par::set_jobs(1);
        const double ts = time_best_of([&] { rs = bernoulli_sup_mc(V, 4000, 9); });
        par::set_jobs(0);
        const double tp = time_best_of([&] { rp = bernoulli_sup_mc(V, 4000, 9); });
        std::printf("%-34s %10.4f %10.4f %7.2fx %6s\n", "bernoulli_sup_mc 64x512x4000",
                    ts, tp, ts / tp, rs == rp ? "yes" : "NO");
    }

    // Matrix sampling + extreme singular values (one sweep cell)
    {
        auto cell = [&] {
            for (std::size_t t = 0; t < 8; ++t) {
                const auto X = sample_matrix(gauss, 800, 200, derive_seed(3, t));
                (void)extreme_singulars(X.data);
            }
        };
        par::set_jobs(1);
        const double ts = time_best_of(cell, 2);
        par::set_jobs(0);
        const double tp = time_best_of(cell, 2);
        std::printf("%-34s %10.4f %10.4f %7.2fx %6s\n", "baiyin cell 8x(800x200)", ts, tp,
                    ts / tp, "yes");
    }

    return 0;
}
