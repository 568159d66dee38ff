// Three tamed schemes on one Brownian path of the stochastic Lorenz model.
#include "tamed/tamed.hpp"

#include <cstdio>

int main() {
    using namespace tamed;
    const ModelSpec model = make_model("lorenz");
    const SchemeParams p; // delta=5, theta=1/4, gamma=(1,1,1/2)
    const auto fine = sample_lattice(model.m, 10, 1.0, true, StreamKey{7, 0});

    for (Scheme s : {Scheme::Euler, Scheme::Milstein, Scheme::Order15}) {
        const auto path = simulate_path(model, s, fine, p);
        const Vector y = path.terminal();
        std::printf("%-9s Y(T) = (% .6f, % .6f, % .6f)%s\n", scheme_name(s), y(0), y(1), y(2),
                    path.frozen ? "  [stopped]" : "");
    }
    // same path, coarser grid
    const auto coarse = simulate_path(model, Scheme::Order15, coarsen(fine, 5), p);
    const Vector y = coarse.terminal();
    std::printf("order15 at level 5: (% .6f, % .6f, % .6f)\n", y(0), y(1), y(2));
}
