#ifndef CSKM_PORTER_STEMMER_H_
#define CSKM_PORTER_STEMMER_H_

#include <string>
#include <string_view>

namespace cskm {

// Porter (1980) suffix-stripping stemmer with the original rule set and no
// minimum-length guard. Expects a lowercase word.
std::string porter_stem(std::string_view word);

}  // namespace cskm

#endif  // CSKM_PORTER_STEMMER_H_
