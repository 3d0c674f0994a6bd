from edrlab.cli import main
import sys

sys.exit(main())
