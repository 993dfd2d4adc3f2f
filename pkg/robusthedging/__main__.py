import sys

from robusthedging.main import main

sys.exit(main())
