// SPDX-License-Identifier: Apache-2.0
//
// rng.hpp

#pragma once

#include <cstdint>
#include <initializer_list>

namespace batsonar
{
    inline constexpr std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    // Stream seed for a tuple of indices. Independent of evaluation order, so
    // serial and parallel generators see the same noise for the same record.
    inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys)
    {
        std::uint64_t h = splitmix64(master);
        for (auto k : keys)
            h = splitmix64(h ^ splitmix64(k + 0x632BE59BD9B4E019ull));
        return h;
    }
}
