// Benchmark comparing the serial reference kernels against the OpenMP
// versions: dataset generation, mini-batch gradients, dataset evaluation and
// a particle-filter sweep. Outputs one line per kernel and policy.

#include <chrono>
#include <cstdio>
#include <numeric>

#include "njode/datasets.hpp"
#include "njode/model.hpp"
#include "njode/parallel.hpp"
#include "njode/particle.hpp"
#include "njode/train.hpp"

using namespace njode;

namespace {

double time_it(const char* name, par::Exec exec, const std::function<double()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    const double checksum = body();
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%-24s %-7s %8.3f s   (checksum %.12g)\n", name,
                exec == par::Exec::Serial ? "serial" : "openmp", sec, checksum);
    return sec;
}

}  // namespace

int main(int argc, char** argv) {
    int n_paths = 2000;
    if (argc > 1) n_paths = std::atoi(argv[1]);
    std::printf("threads available: %d, paths: %d\n", par::max_threads(), n_paths);

    const ModelSpec spec = ModelSpec::bm_drift(0.0, 0.2, 0.05, 0.1);
    GenerationConfig gen;
    gen.n_paths = n_paths;
    gen.test_paths = 0;
    gen.seed = 7;

    Dataset ds;
    for (par::Exec exec : {par::Exec::Serial, par::Exec::OpenMP})
        time_it("generate", exec, [&] {
            ds = generate_role(spec, gen, DatasetRole::Train, n_paths, exec);
            return ds.samples.back().u_dense.sum();
        });

    const NjodeParams params = make_njode(1, 1, 100, {100}, Activation::Tanh, 3, NjodeFlags{}, 1);
    TrainConfig tc;
    tc.seed = 1;
    std::vector<int> batch(std::min(200, n_paths));
    std::iota(batch.begin(), batch.end(), 0);
    NjodeParams grads = njode_zero_grads(params);

    for (par::Exec exec : {par::Exec::Serial, par::Exec::OpenMP})
        time_it("batch_gradient", exec, [&] {
            double acc = 0.0;
            for (int rep = 0; rep < 5; ++rep) acc += batch_gradient(params, ds, batch, tc, rep, grads, exec);
            return acc;
        });

    for (par::Exec exec : {par::Exec::Serial, par::Exec::OpenMP})
        time_it("dataset_loss", exec, [&] { return dataset_loss(params, ds, LossVariant::Io, 1e-10, exec); });

    const ModelSpec gbm = ModelSpec::gbm_uncertain(1.0, 0.05, 0.1, 0.05, 0.5);
    for (par::Exec exec : {par::Exec::Serial, par::Exec::OpenMP})
        time_it("pf_update x50", exec, [&] {
            ParticleSet ps = pf_init(gbm, 100000, 3);
            double x = 1.0;
            for (int i = 1; i <= 50; ++i) {
                const double xn = 1.0 + 0.01 * i;
                ps = pf_update(ps, gbm, x, xn, 0.01, 0.0, exec);
                x = xn;
            }
            return pf_estimate(ps)[0];
        });
    return 0;
}
