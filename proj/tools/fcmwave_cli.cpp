#include "fcmwave/harness.hpp"

int main(int argc, char** argv) { return fcmwave::cli_main(argc, argv); }
