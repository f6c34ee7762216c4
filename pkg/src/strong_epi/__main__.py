"""Allow ``python -m strong_epi``."""

import sys

from .cli import main

sys.exit(main())
