// Writes the synthetic HMO-like data set (premium, expense, new_england) as CSV.
// usage: make_hmo_analogue <out.csv> [seed] [n]

#include <cstdlib>
#include <iostream>
#include <string>

#include "hlmgibbs/eb_pipeline.hpp"
#include "hlmgibbs/io/csv.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: make_hmo_analogue <out.csv> [seed] [n]\n";
        return 2;
    }
    const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 20240601;
    const long n = argc > 3 ? std::stol(argv[3]) : 341;
    const auto d = hlm::synthetic_hmo_analogue(seed, n);
    hlm::MatrixXd table(n, 3);
    table << d.premium, d.expense, d.new_england;
    hlm::io::write_csv(argv[1], {"premium", "expense", "new_england"}, table);
    return 0;
}
