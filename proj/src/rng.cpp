#include "bbal/rng.hpp"

#include <cmath>
#include <memory>

#include "bbal/errors.hpp"

namespace bbal {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t mix64(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0;
    for (auto w : words) h = mix64(h ^ mix64(w + 0x9e3779b97f4a7c15ULL));
    return h;
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

std::size_t Rng::below(std::size_t n) {
    if (n == 0) throw InputError("Rng::below: empty range");
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
}

UniformStream UniformStream::seeded(std::uint64_t seed) {
    return UniformStream([rng = Rng(seed)]() mutable { return rng.uniform(); });
}

UniformStream UniformStream::constant(double value) {
    return UniformStream([value] { return value; });
}

UniformStream UniformStream::sequence(std::vector<double> values) {
    if (values.empty()) throw InputError("UniformStream::sequence: no values");
    return UniformStream([values = std::move(values), pos = std::size_t{0}]() mutable {
        double v = values[pos];
        pos = (pos + 1) % values.size();
        return v;
    });
}

}  // namespace bbal
