#pragma once

namespace majority {

// Exit status: 0 ok, 1 usage error, 2 numerical failure, 3 resource cap.
int run_cli(int argc, const char* const* argv);

}  // namespace majority
