// Draws a Gamma(10, 25) sample and fits it with every estimator.

#include <cmath>
#include <cstdio>
#include <string>

#include "gammabayes/gammabayes.hpp"

int main() {
    namespace gb = gammabayes;

    const gb::GammaParams truth(10.0, 25.0);
    const gb::Sample s = gb::sample(truth, 1000, 42);

    gb::Hyperparameters hyper;
    hyper.rate = {0.01, 0.01};

    std::printf("%-4s %10s %10s %6s %12s\n", "", "shape", "scale", "iters", "KL");
    for (gb::Method m : gb::kAllMethods) {
        const gb::FitResult r = gb::fit(m, s, hyper);
        std::printf("%-4s %10.5f %10.5f %6d %12.3e\n", std::string(gb::to_string(m)).c_str(),
                    r.params.shape(), r.params.scale(), r.iterations,
                    gb::kl_divergence(truth, r.params));
    }

    const gb::FitResult bl1 = gb::fit_bl1(s, hyper.bl1, hyper.rate);
    std::printf("\nBL1 Laplace precision %.4g (sd %.4g)\n", *bl1.laplace_precision,
                1.0 / std::sqrt(*bl1.laplace_precision));
}
