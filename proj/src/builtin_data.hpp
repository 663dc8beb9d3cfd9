#ifndef RAGPOISON_SRC_BUILTIN_DATA_HPP_
#define RAGPOISON_SRC_BUILTIN_DATA_HPP_

#include <string_view>

namespace ragpoison::builtin {

// Contents of data/gazetteer/*.txt, compiled in at configure time.
std::string_view locations_gazetteer();
std::string_view persons_gazetteer();

}  // namespace ragpoison::builtin

#endif  // RAGPOISON_SRC_BUILTIN_DATA_HPP_
