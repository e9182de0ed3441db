#include "halluforge/rng.hpp"

#include <numeric>

#include "halluforge/digest.hpp"

namespace halluforge {

std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
    require(k <= n, ErrorCode::precondition, "sample size exceeds population");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, n - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view key) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((run_seed >> (8 * i)) & 0xff);
    return fnv1a64(key, fnv1a64(std::string_view(bytes, 8)));
}

}  // namespace halluforge
