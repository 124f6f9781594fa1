from invoke import Collection

from . import test

ns = Collection()
ns.add_collection(test)
