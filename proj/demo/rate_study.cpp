// Small Milstein convergence study on the experimental psychology model.
#include "tamed/tamed.hpp"

#include <iostream>

int main() {
    using namespace tamed;
    const ModelSpec model = make_model("exp-psych");
    StudyOptions opt;
    opt.levels = {3, 4, 5, 6, 7};
    opt.ref_level = 10;
    opt.paths = 200;
    opt.seed = 1;
    const auto rep = run_convergence(model, Scheme::Milstein, opt, SchemeParams{});
    write_convergence_csv(std::cout, rep);
}
