// Minimal tour: Koch curve, its gamma-dimension, the staircase, a memoryless law on it.
#include "fractalms/fractalms.hpp"

#include <cstdio>

int main()
{
    using namespace fractalms;
    auto curve = std::make_shared<const FractalCurve>(build_koch(6));
    const double dim = gamma_dimension(*curve, 0.0, 1.0, 1e-4);
    std::printf("gamma-dimension  %.6f  (ln4/ln3 = %.6f)\n", dim, koch_dimension);

    auto table = std::make_shared<const StaircaseTable>(build_staircase(curve, koch_dimension, 0.0));
    std::printf("S(1/4)/S(1)      %.9f\n", table->S(0.25) / table->S(1.0));
    std::printf("S(1)             %.9f  (1/Gamma(alpha+1) = %.9f)\n", table->S(1.0),
                1.0 / lanczos_gamma(koch_dimension + 1.0));

    StaircaseOptions unit;
    unit.total_mass = 1.0;
    auto unit_table = std::make_shared<const StaircaseTable>(build_staircase(curve, koch_dimension, 0.0, unit));
    const auto dist = DistributionOnCurve::memoryless(unit_table, 1.0);
    const auto draws = sample(dist, 7, 5);
    for (std::size_t i = 0; i < draws.count; ++i)
        std::printf("draw %zu: J=%.6f  x=(%.6f, %.6f)\n", i, draws.j[i], draws.points[i].x[0], draws.points[i].x[1]);
    return 0;
}
