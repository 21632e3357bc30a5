#include <doctest.h>

#include "loss_gradcheck_suite.hpp"

using namespace gantruth;

TEST_CASE("analytic gradients of every loss match central finite differences") {
    auto report = testutil::run_loss_gradchecks(/*instances_per_loss=*/4, /*seed=*/1234);
    for (const auto& [name, r] : report.per_loss) {
        INFO(name, ": ", r.worst_location);
        CHECK(r.coords_checked > 0);
        CHECK(r.worst_rel_error < 1e-4);
    }
    // the full bank is present
    const char* expected[] = {"gan_loss_discriminator",
                              "gan_loss_generator",
                              "kl_to_standard_normal",
                              "vae_loss",
                              "cycle_consistency_loss",
                              "gt_semseg_loss",
                              "gt_disparity_loss",
                              "gt_instance_loss",
                              "semantic_consistency_loss",
                              "gantruth_objective_generator",
                              "gantruth_objective_discriminator",
                              "unit_objective_generator",
                              "unit_objective_discriminator"};
    for (const char* name : expected) CHECK(report.per_loss.count(name) == 1);
}

TEST_CASE("engine primitive gradients: norm, pooling, transpose conv, roi") {
    Rng rng(4321);
    using testutil::grad_leaf;

    auto x = grad_leaf(rng, {2, 3, 4, 4}, -1, 1);
    nn::NamedParams<double> reg;
    nn::InstanceNorm2d<double> norm(reg, "n", 3);
    auto r1 = testutil::gradcheck({x, norm.gamma, norm.beta},
                                  [&] { return nn::mean(nn::vtanh(norm(x))); }, rng);
    CHECK(r1.worst_rel_error < 1e-4);

    nn::ConvTranspose2d<double> up(rng, reg, "up", 3, 2, 4, 2, 1);
    auto r2 = testutil::gradcheck({x, up.w, up.b},
                                  [&] { return nn::mean(nn::square(up(x))); }, rng);
    CHECK(r2.worst_rel_error < 1e-4);

    auto r3 = testutil::gradcheck(
        {x}, [&] { return nn::mean(nn::avg_pool2x2(nn::upsample_nearest2x(x))); }, rng);
    CHECK(r3.worst_rel_error < 1e-4);

    auto r4 = testutil::gradcheck(
        {x}, [&] { return nn::mean(nn::roi_nearest(x, 1, 1, 0, 4, 3, 3, 5)); }, rng);
    CHECK(r4.worst_rel_error < 1e-4);

    nn::Linear<double> lin(rng, reg, "lin", 8, 3);
    auto flat = grad_leaf(rng, {2, 8}, -1, 1);
    auto r5 = testutil::gradcheck({flat, lin.w, lin.b},
                                  [&] { return nn::mean(nn::softplus(lin(flat))); }, rng);
    CHECK(r5.worst_rel_error < 1e-4);
}
