#pragma once

#define BMLR_VERSION "0.1.0"
