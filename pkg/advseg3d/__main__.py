# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import sys

from .cli import main


sys.exit(main())
