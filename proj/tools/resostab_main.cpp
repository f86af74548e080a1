#include "resostab/app.hpp"

int main(int argc, char** argv) { return resostab::app::cli_main(argc, argv); }
