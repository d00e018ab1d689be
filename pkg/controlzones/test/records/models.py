from controlzones import fields
from controlzones.records import Record


class Station(Record):
    name = fields.CharField()
    code = fields.ChoiceField(choices=('M', 'B'))
    docks = fields.IntegerField(min_value=0, default=10)
    capacity = fields.FloatField(min_value=0.0, max_value=1.0,
                                 required=False)
    opened = fields.DateField(required=False)
    first_train = fields.TimeField(required=False)


class MetroStation(Station):
    line = fields.IntegerField(min_value=1)
