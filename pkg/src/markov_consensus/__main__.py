import sys

from markov_consensus.cli import main

sys.exit(main())
