# Adapted from the Detectron AttrDict (Apache License 2.0, Facebook, Inc.)
"""Attribute dictionary used for the nested configuration tree."""

import copy


class AttrDict(dict):
    """Dictionary whose keys are also attributes; nested dicts become AttrDicts."""

    IMMUTABLE = '__immutable__'

    def __init__(self, *args, **kwargs):
        super(AttrDict, self).__init__(*args, **kwargs)
        self.__dict__[AttrDict.IMMUTABLE] = False
        for k, v in list(self.items()):
            if isinstance(v, dict) and not isinstance(v, AttrDict):
                super(AttrDict, self).__setitem__(k, AttrDict(v))

    def __getattr__(self, name):
        if name in self.__dict__:
            return self.__dict__[name]
        if name in self:
            return self[name]
        raise AttributeError(name)

    def __setattr__(self, name, value):
        if self.__dict__.get(AttrDict.IMMUTABLE, False):
            raise AttributeError(
                'Attempted to set "{}" to "{}", but AttrDict is immutable'.
                format(name, value))
        if name in self.__dict__:
            self.__dict__[name] = value
        else:
            self[name] = value

    def __setitem__(self, name, value):
        if self.__dict__.get(AttrDict.IMMUTABLE, False):
            raise AttributeError(
                'Attempted to set "{}" to "{}", but AttrDict is immutable'.
                format(name, value))
        if isinstance(value, dict) and not isinstance(value, AttrDict):
            value = AttrDict(value)
        super(AttrDict, self).__setitem__(name, value)

    def __deepcopy__(self, memo):
        out = AttrDict()
        for k, v in self.items():
            dict.__setitem__(out, k, copy.deepcopy(v, memo))
        return out

    def immutable(self, is_immutable):
        """
        Set immutability to is_immutable and recursively apply the setting
        to all nested AttrDicts

        :param is_immutable: boolean, whether the dictionary is immutable or not
        """
        self.__dict__[AttrDict.IMMUTABLE] = is_immutable
        for v in self.values():
            if isinstance(v, AttrDict):
                v.immutable(is_immutable)

    def is_immutable(self):
        return self.__dict__.get(AttrDict.IMMUTABLE, False)

    def to_dict(self):
        """Plain nested dict, suitable for json/yaml dumping."""
        return {k: v.to_dict() if isinstance(v, AttrDict) else v
                for k, v in self.items()}
