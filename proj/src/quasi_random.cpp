#include "beebo/quasi_random.hpp"

#include <random>

#include <boost/math/distributions/normal.hpp>
#include <boost/random/sobol.hpp>

#include "beebo/errors.hpp"

namespace beebo {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double to_open_unit(std::uint64_t bits) {
    // 53 high bits, centred in their cell so 0 and 1 never occur.
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = splitmix64(base);
    for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return h;
}

std::uint32_t sobol_max_dimension() { return BOOST_RANDOM_SOBOL_MAX_DIMENSION; }

Matrix sobol_uniform(Eigen::Index count, Eigen::Index dim, std::uint64_t seed) {
    if (count < 0 || dim < 1) throw InvalidArgument("sobol_uniform: invalid shape");
    Matrix out(count, dim);
    std::mt19937_64 rng(seed);
    if (dim > static_cast<Eigen::Index>(sobol_max_dimension())) {
        for (Eigen::Index i = 0; i < count; ++i)
            for (Eigen::Index j = 0; j < dim; ++j) out(i, j) = to_open_unit(rng());
        return out;
    }
    std::vector<std::uint64_t> shift(static_cast<std::size_t>(dim));
    for (auto& s : shift) s = rng();
    boost::random::sobol engine(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < count; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            const std::uint64_t v = static_cast<std::uint64_t>(engine()) ^ shift[static_cast<std::size_t>(j)];
            out(i, j) = to_open_unit(v);
        }
    }
    return out;
}

Matrix sobol_normal(Eigen::Index count, Eigen::Index dim, std::uint64_t seed) {
    Matrix u = sobol_uniform(count, dim, seed);
    const boost::math::normal standard;
    return u.unaryExpr([&](double p) { return boost::math::quantile(standard, p); });
}

} // namespace beebo
