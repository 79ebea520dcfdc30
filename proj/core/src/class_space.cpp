#include "sats/class_space.hpp"

#include <algorithm>
#include <sstream>

#include "sats/error.hpp"

namespace sats {

bool ClassSpace::is_head(int c) const {
  return std::find(head_classes.begin(), head_classes.end(), c) != head_classes.end();
}

void ClassSpace::validate(bool open_set) const {
  if (num_known < 1) throw ValidationError("class space: num_known must be >= 1");
  if (num_known >= kIgnoreIndex) {
    throw ValidationError("class space: num_known must leave room for unknown and ignore indices");
  }
  if (num_private < 0) throw ValidationError("class space: num_private must be >= 0");
  if (open_set && num_private < 1) {
    throw ValidationError("class space: an open-set target needs num_private >= 1");
  }
  for (int c : head_classes) {
    if (c == unknown_index() || c == kIgnoreIndex) {
      throw ValidationError("class space: head classes may not contain unknown or ignore");
    }
    if (!is_known(c)) {
      throw ValidationError("class space: head class " + std::to_string(c) + " is not a known class");
    }
  }
}

std::string to_string(const ClassSpace& cs) {
  std::ostringstream os;
  os << "K=" << cs.num_known << " K'=" << cs.num_private << " unknown=" << cs.unknown_index()
     << " head={";
  for (std::size_t i = 0; i < cs.head_classes.size(); ++i) {
    os << (i ? "," : "") << cs.head_classes[i];
  }
  os << "}";
  return os.str();
}

}  // namespace sats
