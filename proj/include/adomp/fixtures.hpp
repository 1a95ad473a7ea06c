// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

namespace adomp {

/// Contents of every `fixtures/*.adsl` file keyed by file stem.
const std::map<std::string, std::string>& embedded_fixture_sources();

}  // namespace adomp
